#pragma once

// CSV and model-document formats.
//
//   logits         z_1,...,z_K[,y]        y is 1-based
//   distributions  p_1,...,p_K
//   boxes          l_1,u_1,...,l_K,u_K
//   model          JSON, schema "credal-decal/1"; infinite shift endpoints
//                  are the strings "-inf" / "inf"
//
// Numbers are written with 17 significant digits so read-back is exact.

#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "credal/error.hpp"
#include "credal/types.hpp"

namespace credal::io {

inline constexpr std::string_view kModelSchema = "credal-decal/1";

inline std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::IoError, "cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCode::IoError, "cannot open '" + path + "' for writing");
  out << text;
  require(static_cast<bool>(out), ErrorCode::IoError, "failed writing '" + path + "'");
}

namespace detail {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    std::string_view f = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.remove_prefix(1);
    while (!f.empty() && (f.back() == ' ' || f.back() == '\t' || f.back() == '\r')) f.remove_suffix(1);
    out.push_back(f);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline double parse_number(std::string_view f, const std::string& where) {
  double v = 0.0;
  const auto* end = f.data() + f.size();
  auto [ptr, ec] = std::from_chars(f.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    if (f == "inf" || f == "+inf") return std::numeric_limits<double>::infinity();
    if (f == "-inf") return -std::numeric_limits<double>::infinity();
    throw Error(ErrorCode::ParseError, where + ": cannot parse '" + std::string(f) + "' as a number");
  }
  return v;
}

inline CsvTable parse_csv(const std::string& text, const std::string& source) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_fields(line);
    if (t.header.empty()) {
      for (auto f : fields) t.header.emplace_back(f);
      continue;
    }
    const std::string where = source + ":" + std::to_string(line_no);
    require(fields.size() == t.header.size(), ErrorCode::ParseError,
            where + ": expected " + std::to_string(t.header.size()) + " fields, found " +
                std::to_string(fields.size()));
    std::vector<double> row;
    row.reserve(fields.size());
    for (auto f : fields) row.push_back(parse_number(f, where));
    t.rows.push_back(std::move(row));
  }
  require(!t.header.empty(), ErrorCode::ParseError, source + ": missing header line");
  return t;
}

// Checks header == prefix_1..prefix_K and returns K.
inline std::size_t expect_indexed_header(const std::vector<std::string>& header, std::size_t count,
                                         std::string_view prefix, const std::string& source) {
  for (std::size_t k = 0; k < count; ++k) {
    const std::string want = std::string(prefix) + std::to_string(k + 1);
    require(header[k] == want, ErrorCode::ParseError,
            source + ":1: expected column '" + want + "', found '" + header[k] + "'");
  }
  return count;
}

inline void require_rows(const CsvTable& t, const std::string& source) {
  require(!t.rows.empty(), ErrorCode::ParseError, source + ": no data rows");
}

}  // namespace detail

struct LogitTable {
  LogitMatrix logits;
  std::optional<std::vector<std::size_t>> labels;  // 0-based
};

inline LogitTable parse_logits_csv(const std::string& text, const std::string& source = "<logits>") {
  auto t = detail::parse_csv(text, source);
  detail::require_rows(t, source);
  const bool has_y = t.header.back() == "y";
  const std::size_t kk = has_y ? t.header.size() - 1 : t.header.size();
  detail::expect_indexed_header(t.header, kk, "z_", source);
  std::vector<double> flat;
  flat.reserve(t.rows.size() * kk);
  std::vector<std::size_t> labels;
  for (std::size_t n = 0; n < t.rows.size(); ++n) {
    const auto& r = t.rows[n];
    flat.insert(flat.end(), r.begin(), r.begin() + static_cast<std::ptrdiff_t>(kk));
    if (has_y) {
      const double y = r.back();
      require(y == std::floor(y) && y >= 1.0 && y <= static_cast<double>(kk), ErrorCode::LabelOutOfRange,
              source + ": row " + std::to_string(n + 1) + " has label " + format_double(y) + " outside 1.." +
                  std::to_string(kk));
      labels.push_back(static_cast<std::size_t>(y) - 1);
    }
  }
  LogitTable out{LogitMatrix(t.rows.size(), kk, std::move(flat)), std::nullopt};
  if (has_y) out.labels = std::move(labels);
  return out;
}

inline LabeledLogits read_labeled_logits(const std::string& path) {
  auto table = parse_logits_csv(read_text(path), path);
  require(table.labels.has_value(), ErrorCode::ParseError, path + ": training file needs a 'y' column");
  return LabeledLogits(std::move(table.logits), std::move(*table.labels));
}

// A trailing y column, if present, is ignored.
inline LogitMatrix read_logits(const std::string& path) { return parse_logits_csv(read_text(path), path).logits; }

inline std::vector<ProbabilityVector> parse_distributions_csv(const std::string& text, bool renormalize,
                                                              const std::string& source = "<distributions>") {
  auto t = detail::parse_csv(text, source);
  detail::require_rows(t, source);
  detail::expect_indexed_header(t.header, t.header.size(), "p_", source);
  std::vector<ProbabilityVector> out;
  out.reserve(t.rows.size());
  for (std::size_t n = 0; n < t.rows.size(); ++n) {
    auto row = std::move(t.rows[n]);
    if (renormalize) {
      double s = 0.0;
      for (double v : row) s += v;
      require(s > 0.0 && std::isfinite(s), ErrorCode::NotNormalized,
              source + ": row " + std::to_string(n + 1) + " cannot be renormalized");
      for (double& v : row) v /= s;
    }
    try {
      out.push_back(validate_probability_vector(std::move(row)));
    } catch (const Error& e) {
      throw Error(e.code(), source + ": row " + std::to_string(n + 1) + ": " + e.what());
    }
  }
  return out;
}

inline std::vector<ProbabilityVector> read_distributions(const std::string& path, bool renormalize = false) {
  return parse_distributions_csv(read_text(path), renormalize, path);
}

inline std::string format_logits_csv(const LogitMatrix& m,
                                     std::optional<std::span<const std::size_t>> labels = std::nullopt) {
  std::string s;
  for (std::size_t k = 0; k < m.cols(); ++k) s += (k ? ",z_" : "z_") + std::to_string(k + 1);
  if (labels) s += ",y";
  s += '\n';
  for (std::size_t n = 0; n < m.rows(); ++n) {
    const auto r = m.row(n);
    for (std::size_t k = 0; k < r.size(); ++k) {
      if (k) s += ',';
      s += format_double(r[k]);
    }
    if (labels) s += "," + std::to_string((*labels)[n] + 1);
    s += '\n';
  }
  return s;
}

inline std::string format_distributions_csv(const std::vector<ProbabilityVector>& ps) {
  require(!ps.empty(), ErrorCode::EmptyList, "no distributions to write");
  std::string s;
  for (std::size_t k = 0; k < ps.front().size(); ++k) s += (k ? ",p_" : "p_") + std::to_string(k + 1);
  s += '\n';
  for (const auto& p : ps) {
    for (std::size_t k = 0; k < p.size(); ++k) {
      if (k) s += ',';
      s += format_double(p[k]);
    }
    s += '\n';
  }
  return s;
}

inline std::string format_boxes_csv(const std::vector<BoxCredalSet>& boxes) {
  require(!boxes.empty(), ErrorCode::EmptyList, "no boxes to write");
  std::string s;
  for (std::size_t k = 0; k < boxes.front().size(); ++k) {
    if (k) s += ',';
    s += "l_" + std::to_string(k + 1) + ",u_" + std::to_string(k + 1);
  }
  s += '\n';
  for (const auto& b : boxes) {
    for (std::size_t k = 0; k < b.size(); ++k) {
      if (k) s += ',';
      s += format_double(b[k].lower()) + "," + format_double(b[k].upper());
    }
    s += '\n';
  }
  return s;
}

inline std::vector<BoxCredalSet> parse_boxes_csv(const std::string& text, const std::string& source = "<boxes>") {
  auto t = detail::parse_csv(text, source);
  detail::require_rows(t, source);
  require(t.header.size() % 2 == 0, ErrorCode::ParseError, source + ":1: odd number of box columns");
  const std::size_t kk = t.header.size() / 2;
  for (std::size_t k = 0; k < kk; ++k) {
    const std::string l = "l_" + std::to_string(k + 1);
    const std::string u = "u_" + std::to_string(k + 1);
    require(t.header[2 * k] == l && t.header[2 * k + 1] == u, ErrorCode::ParseError,
            source + ":1: expected columns '" + l + "," + u + "'");
  }
  std::vector<BoxCredalSet> out;
  out.reserve(t.rows.size());
  for (std::size_t n = 0; n < t.rows.size(); ++n) {
    std::vector<ProbabilityInterval> iv;
    try {
      for (std::size_t k = 0; k < kk; ++k) iv.emplace_back(t.rows[n][2 * k], t.rows[n][2 * k + 1]);
      out.emplace_back(std::move(iv));
    } catch (const Error& e) {
      throw Error(e.code(), source + ": row " + std::to_string(n + 1) + ": " + e.what());
    }
  }
  return out;
}

inline std::vector<BoxCredalSet> read_boxes(const std::string& path) { return parse_boxes_csv(read_text(path), path); }

namespace detail {

inline nlohmann::json extended(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

inline double extended_from(const nlohmann::json& j, const char* key) {
  require(j.contains(key), ErrorCode::ParseError, std::string("missing field '") + key + "'");
  const auto& v = j.at(key);
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw Error(ErrorCode::ParseError, std::string("field '") + key + "' has unknown value '" + s + "'");
  }
  require(v.is_number(), ErrorCode::ParseError, std::string("field '") + key + "' is not a number");
  return v.get<double>();
}

template <class T>
T field(const nlohmann::json& j, const char* key) {
  require(j.contains(key), ErrorCode::ParseError, std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("field '") + key + "': " + e.what());
  }
}

}  // namespace detail

inline std::string model_to_json(const DecalibrationModel& model) {
  nlohmann::ordered_json doc;
  doc["schema"] = kModelSchema;
  doc["K"] = model.num_classes();
  doc["N"] = model.num_train();
  doc["mode"] = to_string(model.mode());
  doc["tol"] = model.tol();
  doc["clamp"] = model.clamp();
  auto levels = nlohmann::ordered_json::array();
  for (const auto& lv : model.levels()) {
    nlohmann::ordered_json l;
    l["alpha"] = lv.alpha.alpha();
    auto eps = nlohmann::ordered_json::array();
    for (const auto& e : lv.endpoints) {
      nlohmann::ordered_json o;
      o["t_minus"] = detail::extended(e.t_minus);
      o["t_plus"] = detail::extended(e.t_plus);
      o["residual_minus"] = e.residual_minus;
      o["residual_plus"] = e.residual_plus;
      eps.push_back(std::move(o));
    }
    l["endpoints"] = std::move(eps);
    levels.push_back(std::move(l));
  }
  doc["levels"] = std::move(levels);
  return doc.dump(2) + "\n";
}

inline DecalibrationModel model_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  require(doc.is_object(), ErrorCode::ParseError, "model document is not a JSON object");
  const auto schema = detail::field<std::string>(doc, "schema");
  require(schema == kModelSchema, ErrorCode::SchemaVersionMismatch,
          "expected schema '" + std::string(kModelSchema) + "', found '" + schema + "'");
  const auto kk = detail::field<std::size_t>(doc, "K");
  std::vector<DecalibrationModel::Level> levels;
  require(doc.contains("levels") && doc["levels"].is_array(), ErrorCode::ParseError, "missing 'levels' array");
  for (const auto& l : doc["levels"]) {
    DecalibrationModel::Level lv{AlphaLevel(detail::field<double>(l, "alpha")), {}};
    require(l.contains("endpoints") && l["endpoints"].is_array(), ErrorCode::ParseError, "missing 'endpoints'");
    for (const auto& e : l["endpoints"]) {
      lv.endpoints.push_back({detail::extended_from(e, "t_minus"), detail::extended_from(e, "t_plus"),
                              detail::field<double>(e, "residual_minus"), detail::field<double>(e, "residual_plus")});
    }
    levels.push_back(std::move(lv));
  }
  return DecalibrationModel(kk, detail::field<std::size_t>(doc, "N"),
                            parse_budget_mode(detail::field<std::string>(doc, "mode")), std::move(levels),
                            detail::field<double>(doc, "clamp"), detail::field<double>(doc, "tol"));
}

inline void write_model(const DecalibrationModel& model, const std::string& path) {
  write_text(path, model_to_json(model));
}

inline DecalibrationModel read_model(const std::string& path) { return model_from_json(read_text(path)); }

}  // namespace credal::io
