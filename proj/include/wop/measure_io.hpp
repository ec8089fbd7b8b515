#pragma once

#include <string>

#include "wop/measures.hpp"

namespace wop {

/// Thrown on unreadable or malformed measure files.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

/// Shortest of %.17g representations that round-trips the double; all
/// emitted JSON/CSV numbers go through this for byte-stable output.
std::string format_double(double v);

/// Reads a measure file. Extension .csv selects the CSV reader, anything
/// else the JSON reader.
DiscreteMeasure read_measure(const std::string& path);

/// JSON object { "dim": d, "points": [[..]], "weights": [..] }.
DiscreteMeasure read_measure_json(const std::string& path);
std::string measure_to_json(const DiscreteMeasure& mu);
void write_measure_json(const std::string& path, const DiscreteMeasure& mu);

/// Columns x_1,...,x_d,w with a header line.
DiscreteMeasure read_measure_csv(const std::string& path);
void write_measure_csv(const std::string& path, const DiscreteMeasure& mu);

}  // namespace wop
