#include "lqpg/records.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "lqpg/error.hpp"

namespace lqpg {

namespace {

using nlohmann::json;

constexpr const char* kColumns[] = {"iter", "f", "f_gap", "grad_norm", "gain_err", "evals"};

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

template <typename T>
T parse_field(std::string_view text, int line, int column) {
  T value{};
  const char* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, value);
  if (res.ec != std::errc() || res.ptr != end) {
    throw ValidationError("CSV line " + std::to_string(line) + ", column '" +
                          kColumns[column] + "': cannot parse '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_trace_csv(std::ostream& os, const std::vector<IterationRecord>& records) {
  os << kCsvHeader << '\n';
  for (const IterationRecord& r : records) {
    os << r.iter << ',' << format_double(r.f) << ',' << format_double(r.f_gap) << ','
       << format_double(r.grad_norm) << ',' << format_double(r.gain_err) << ','
       << r.evals << '\n';
  }
}

void write_trace_csv(const std::string& path, const std::vector<IterationRecord>& records) {
  std::ostringstream os;
  write_trace_csv(os, records);
  write_text(path, os.str());
}

std::vector<IterationRecord> parse_trace_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ValidationError("CSV is empty (missing header)");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCsvHeader) {
    throw ValidationError("CSV header '" + line + "' does not match '" + kCsvHeader + "'");
  }
  std::vector<IterationRecord> out;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string_view> fields;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      fields.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (fields.size() != 6) {
      throw ValidationError("CSV line " + std::to_string(lineno) + ": expected 6 columns, got " +
                            std::to_string(fields.size()));
    }
    IterationRecord r;
    r.iter = parse_field<int>(fields[0], lineno, 0);
    r.f = parse_field<double>(fields[1], lineno, 1);
    r.f_gap = parse_field<double>(fields[2], lineno, 2);
    r.grad_norm = parse_field<double>(fields[3], lineno, 3);
    r.gain_err = parse_field<double>(fields[4], lineno, 4);
    r.evals = parse_field<long>(fields[5], lineno, 5);
    out.push_back(r);
  }
  return out;
}

std::vector<IterationRecord> read_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return parse_trace_csv(in);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("write to '" + path + "' failed");
}

std::string summary_json(const RunRecord& record, const ProblemInstance& prob) {
  const IterationTrace& t = record.trace;
  for (const auto* k : {&t.k_final, &t.kstar}) {
    const FeedbackGain gain(prob, *k);
    if (!gain.stabilizing()) {
      throw StabilityError("refusing to write a non-stabilizing gain", gain.max_real_part());
    }
  }
  json j;
  j["spec"] = json::parse(spec_to_json(record.spec));
  j["config_hash"] = record.config_hash;
  j["termination"] = std::string(to_string(t.reason));
  j["iterations"] = t.records.size();
  j["sigma"] = t.sigma;
  j["f_final"] = t.f_final;
  j["fstar"] = t.fstar;
  j["fstar_from_are"] = t.fstar_from_are;
  j["kstar_residual"] = record.kstar_residual;
  j["final_f_gap"] = t.records.empty() ? 0.0 : t.records.back().f_gap;
  j["final_gain_err"] = t.records.empty() ? 0.0 : t.records.back().gain_err;
  j["evals"] = t.records.empty() ? 0L : t.records.back().evals;
  j["wall_ms"] = record.wall_ms;
  if (record.fit) {
    j["rate"] = record.fit->rate;
    j["r_squared"] = record.fit->r_squared;
    j["fit_points"] = record.fit->points;
  } else {
    j["rate"] = nullptr;
    j["r_squared"] = nullptr;
  }
  if (t.budget) {
    j["budget"] = {{"theta", t.budget->theta}, {"eps", t.budget->eps},
                   {"c", t.budget->c},         {"eps_b", t.budget->eps_b},
                   {"eps_a", t.budget->eps_a}, {"eps_r", t.budget->eps_r},
                   {"assembled_bound_holds", t.budget->assembled_bound_holds},
                   {"warnings", t.budget->warnings}};
    j["robust_steps"] = t.robust_steps;
    j["polish_steps"] = t.polish_steps;
  }
  j["k_final"] = matrix_json(t.k_final);
  j["kstar"] = matrix_json(t.kstar);
  return j.dump(2) + "\n";
}

}  // namespace lqpg
