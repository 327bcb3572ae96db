#include "pmstm/data.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "pmstm/errors.hpp"

namespace pmstm {

long long CountDataset::n() const {
  long long total = 0;
  for (const auto& cells : observed) total += static_cast<long long>(cells.size());
  return total;
}

int CountDataset::max_region() const {
  int m = -1;
  for (const auto& cells : prediction)
    for (const auto& c : cells) m = std::max(m, c.region);
  return m;
}

bool CountDataset::has_zero_count() const {
  for (const auto& cells : observed)
    for (const auto& c : cells)
      if (c.count == 0) return true;
  return false;
}

void finalize_dataset(CountDataset& data) {
  if (data.T <= 0 || data.L <= 0)
    throw std::invalid_argument("dataset: L and T must be positive");
  data.observed.resize(data.T);
  data.prediction.resize(data.T);
  data.obs_to_pred_row.assign(data.T, {});
  auto cell_less = [](auto const& a, auto const& b) {
    return std::tie(a.variable, a.region) < std::tie(b.variable, b.region);
  };
  for (int t = 0; t < data.T; ++t) {
    std::sort(data.observed[t].begin(), data.observed[t].end(), cell_less);
    std::sort(data.prediction[t].begin(), data.prediction[t].end(), cell_less);
    std::map<std::pair<int, int>, int> pred_row;
    for (int i = 0; i < static_cast<int>(data.prediction[t].size()); ++i) {
      const auto& c = data.prediction[t][i];
      if (!pred_row.emplace(std::make_pair(c.variable, c.region), i).second)
        throw ParseError("dataset: duplicate prediction cell (variable=" +
                         std::to_string(c.variable) + ", region=" +
                         std::to_string(c.region) + ", time=" +
                         std::to_string(t + 1) + ")");
    }
    data.obs_to_pred_row[t].reserve(data.observed[t].size());
    for (const auto& c : data.observed[t]) {
      auto it = pred_row.find({c.variable, c.region});
      if (it == pred_row.end())
        throw ParseError("dataset: observed cell (variable=" +
                         std::to_string(c.variable) + ", region=" +
                         std::to_string(c.region) + ", time=" +
                         std::to_string(t + 1) +
                         ") is missing from the prediction set");
      data.obs_to_pred_row[t].push_back(it->second);
    }
  }
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

long long parse_int_field(const std::string& s, const char* what, int line_no) {
  std::size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &pos);
  } catch (const std::exception&) {
    throw ParseError(std::string("counts: bad ") + what + " at line " +
                     std::to_string(line_no) + ": '" + s + "'");
  }
  while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  if (pos != s.size())
    throw ParseError(std::string("counts: bad ") + what + " at line " +
                     std::to_string(line_no) + ": '" + s + "'");
  return v;
}

}  // namespace

CountDataset load_counts(const std::string& path,
                         const std::string& prediction_path) {
  std::ifstream in(path);
  if (!in) throw ParseError("counts: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ParseError("counts: empty file '" + path + "'");
  if (line != "variable,region,time,count")
    throw ParseError("counts: expected header 'variable,region,time,count', got '" +
                     line + "'");

  struct Row { int variable, region, time; long long count; };
  std::vector<Row> rows;
  std::set<std::tuple<int, int, int>> seen;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != 4)
      throw ParseError("counts: expected 4 fields at line " +
                       std::to_string(line_no));
    Row r;
    r.variable = static_cast<int>(parse_int_field(fields[0], "variable", line_no));
    r.region = static_cast<int>(parse_int_field(fields[1], "region", line_no));
    r.time = static_cast<int>(parse_int_field(fields[2], "time", line_no));
    r.count = parse_int_field(fields[3], "count", line_no);
    if (r.variable < 1)
      throw ParseError("counts: variable must be >= 1 at line " +
                       std::to_string(line_no));
    if (r.region < 0)
      throw ParseError("counts: region must be >= 0 at line " +
                       std::to_string(line_no));
    if (r.time < 1)
      throw ParseError("counts: time must be >= 1 at line " +
                       std::to_string(line_no));
    if (r.count < 0)
      throw ParseError("counts: negative count at line " +
                       std::to_string(line_no));
    if (!seen.insert({r.variable, r.region, r.time}).second)
      throw ParseError("counts: duplicate cell (variable=" +
                       std::to_string(r.variable) + ", region=" +
                       std::to_string(r.region) + ", time=" +
                       std::to_string(r.time) + ") at line " +
                       std::to_string(line_no));
    rows.push_back(r);
  }
  if (rows.empty()) throw ParseError("counts: no observations in '" + path + "'");

  CountDataset data;
  for (const auto& r : rows) {
    data.L = std::max(data.L, r.variable);
    data.T = std::max(data.T, r.time);
  }
  data.observed.resize(data.T);
  data.prediction.resize(data.T);
  for (const auto& r : rows)
    data.observed[r.time - 1].push_back({r.variable, r.region, r.count});

  if (prediction_path.empty()) {
    for (int t = 0; t < data.T; ++t)
      for (const auto& c : data.observed[t])
        data.prediction[t].push_back({c.variable, c.region});
  } else {
    std::ifstream pin(prediction_path);
    if (!pin)
      throw ParseError("prediction cells: cannot open '" + prediction_path + "'");
    if (!std::getline(pin, line) || line != "variable,region,time")
      throw ParseError(
          "prediction cells: expected header 'variable,region,time'");
    int pline = 1;
    std::set<std::tuple<int, int, int>> pseen;
    while (std::getline(pin, line)) {
      ++pline;
      if (line.empty()) continue;
      const auto fields = split_csv(line);
      if (fields.size() != 3)
        throw ParseError("prediction cells: expected 3 fields at line " +
                         std::to_string(pline));
      const int variable =
          static_cast<int>(parse_int_field(fields[0], "variable", pline));
      const int region =
          static_cast<int>(parse_int_field(fields[1], "region", pline));
      const int time =
          static_cast<int>(parse_int_field(fields[2], "time", pline));
      if (time < 1 || time > data.T)
        throw ParseError("prediction cells: time out of range at line " +
                         std::to_string(pline));
      if (!pseen.insert({variable, region, time}).second)
        throw ParseError("prediction cells: duplicate cell at line " +
                         std::to_string(pline));
      data.prediction[time - 1].push_back({variable, region});
      data.L = std::max(data.L, variable);
    }
  }
  finalize_dataset(data);
  return data;
}

}  // namespace pmstm
