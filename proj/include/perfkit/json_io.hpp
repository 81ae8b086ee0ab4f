#ifndef PERFKIT_JSON_IO_HPP
#define PERFKIT_JSON_IO_HPP

#include "perfkit/eval.hpp"
#include "perfkit/kinetics.hpp"
#include "perfkit/phantom.hpp"
#include "perfkit/preprocess.hpp"

#include <json.hpp>

#include <filesystem>
#include <vector>

namespace perfkit {

using nlohmann::json;

json read_json(const std::filesystem::path& path);
/// Pretty-printed with a trailing newline.
void write_json(const std::filesystem::path& path, const json& doc);

PreprocessConfig preprocess_config_from_json(const json& doc);
json to_json(const PreprocessConfig& config);

PhantomSpec phantom_spec_from_json(const json& doc);
json to_json(const PhantomSpec& spec);

/// [{id, patient_id, gs_code, voxels: [[i,j,k], ...]}, ...]
std::vector<LesionAnnotation> annotations_from_json(const json& doc);
json to_json(const std::vector<LesionAnnotation>& lesions);

json to_json(const std::vector<RegionTruth>& truth);
json to_json(const EvalSummary& summary);

} // namespace perfkit

#endif // PERFKIT_JSON_IO_HPP
