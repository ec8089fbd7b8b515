#include "wop/measure_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "json.hpp"

namespace wop {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

nlohmann::json parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("cannot parse " + path + ": " + e.what());
  }
  return j;
}

}  // namespace

DiscreteMeasure read_measure_json(const std::string& path) {
  const nlohmann::json j = parse_file(path);
  try {
    const Eigen::Index dim = j.at("dim").get<Eigen::Index>();
    const auto& pts = j.at("points");
    const auto& ws = j.at("weights");
    if (pts.size() != ws.size()) {
      throw IoError(path + ": points/weights length mismatch");
    }
    Matrix points(static_cast<Eigen::Index>(pts.size()), dim);
    Vector weights(static_cast<Eigen::Index>(ws.size()));
    for (size_t i = 0; i < pts.size(); ++i) {
      if (static_cast<Eigen::Index>(pts[i].size()) != dim) {
        throw IoError(path + ": point of wrong dimension");
      }
      for (Eigen::Index k = 0; k < dim; ++k) {
        points(static_cast<Eigen::Index>(i), k) = pts[i][k].get<double>();
      }
      weights(static_cast<Eigen::Index>(i)) = ws[i].get<double>();
    }
    return DiscreteMeasure(std::move(points), std::move(weights));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw IoError(path + ": " + e.what());
  }
}

std::string measure_to_json(const DiscreteMeasure& mu) {
  std::ostringstream out;
  out << "{\"dim\": " << mu.dim() << ", \"points\": [";
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    out << (i ? ", [" : "[");
    for (Eigen::Index k = 0; k < mu.dim(); ++k) {
      out << (k ? ", " : "") << format_double(mu.points()(i, k));
    }
    out << "]";
  }
  out << "], \"weights\": [";
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    out << (i ? ", " : "") << format_double(mu.weight(i));
  }
  out << "]}";
  return out.str();
}

void write_measure_json(const std::string& path, const DiscreteMeasure& mu) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << measure_to_json(mu) << "\n";
}

DiscreteMeasure read_measure_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::vector<double> row;
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      try {
        size_t used = 0;
        row.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        numeric = false;
        break;
      }
    }
    if (first && !numeric) {
      first = false;  // header line
      continue;
    }
    first = false;
    if (!numeric) throw IoError(path + ": non-numeric CSV row");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) return DiscreteMeasure::null_measure(0);
  const size_t cols = rows[0].size();
  if (cols < 2) throw IoError(path + ": need columns x_1..x_d,w");
  for (const auto& r : rows) {
    if (r.size() != cols) throw IoError(path + ": ragged CSV rows");
  }
  const Eigen::Index dim = static_cast<Eigen::Index>(cols - 1);
  Matrix points(static_cast<Eigen::Index>(rows.size()), dim);
  Vector weights(static_cast<Eigen::Index>(rows.size()));
  for (size_t i = 0; i < rows.size(); ++i) {
    for (Eigen::Index k = 0; k < dim; ++k) {
      points(static_cast<Eigen::Index>(i), k) = rows[i][k];
    }
    weights(static_cast<Eigen::Index>(i)) = rows[i][cols - 1];
  }
  try {
    return DiscreteMeasure(std::move(points), std::move(weights));
  } catch (const std::invalid_argument& e) {
    throw IoError(path + ": " + e.what());
  }
}

void write_measure_csv(const std::string& path, const DiscreteMeasure& mu) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  for (Eigen::Index k = 0; k < mu.dim(); ++k) out << "x_" << (k + 1) << ",";
  out << "w\n";
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    for (Eigen::Index k = 0; k < mu.dim(); ++k) {
      out << format_double(mu.points()(i, k)) << ",";
    }
    out << format_double(mu.weight(i)) << "\n";
  }
}

DiscreteMeasure read_measure(const std::string& path) {
  if (path.size() >= 4 && path.substr(path.size() - 4) == ".csv") {
    return read_measure_csv(path);
  }
  return read_measure_json(path);
}

}  // namespace wop
