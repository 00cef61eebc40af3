#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "fluortraj/ensemble.hpp"
#include "fluortraj/measure.hpp"

namespace fluortraj {

using Json = nlohmann::ordered_json;

// Hexadecimal float ("%a") when exact, shortest round-trip decimal otherwise.
std::string format_double(double v, bool exact);
double parse_double(const std::string& s);

std::string csv_escape(const std::string& field);
std::vector<std::string> csv_split(const std::string& line);

class CsvWriter {
public:
    CsvWriter(std::ostream& out, std::vector<std::string> header, bool exact = false);
    void row(const std::vector<double>& values);
    void row_fields(const std::vector<std::string>& fields);
    bool exact() const { return exact_; }

private:
    std::ostream& out_;
    std::size_t columns_;
    bool exact_;
};

Json to_json(const SchemeConfig& cfg);
SchemeConfig scheme_config_from_json(const Json& j);
Json to_json(const BlochVector& q);

Json ensemble_sidecar(const Ensemble& e);
void write_ensemble_csv(std::ostream& out, const Ensemble& e, bool exact);
Ensemble read_ensemble_csv(std::istream& in, const Json& sidecar);

void write_text(const std::string& path, const std::string& text);
void write_json(const std::string& path, const Json& j);
Json read_json(const std::string& path);

}  // namespace fluortraj
