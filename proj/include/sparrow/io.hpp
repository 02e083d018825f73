#ifndef SPARROW_IO_HPP
#define SPARROW_IO_HPP

#include <string>

#include <json.hpp>

#include <sparrow/bench.hpp>
#include <sparrow/model.hpp>

namespace sparrow::io
{

using Json = nlohmann::json;

inline constexpr int schema_version = 1;

/// Complex matrices are stored row by row with entries as [re, im].
Json to_json(const ComplexMatrix& m);
ComplexMatrix complex_matrix_from_json(const Json& j);

struct BatchFile
{
    ArrayGeometry geometry;
    std::optional<SourceScene> scene;
    MmvBatch batch;
};

Json batch_to_json(const BatchFile& f);
/// Throws InvalidArgument with every schema violation listed.
BatchFile batch_from_json(const Json& j);

Json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const Json& j);

Json report_to_json(const MetricsReport& rep);

Json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

} // namespace sparrow::io

#endif // SPARROW_IO_HPP
