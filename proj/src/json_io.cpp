#include "perfkit/json_io.hpp"

#include "perfkit/error.hpp"

#include <fstream>

namespace perfkit {

namespace {

template <typename T>
T field(const json& doc, const char* key)
{
    if (!doc.contains(key))
        throw ValidationError(std::string("missing JSON field '") + key + "'");
    try {
        return doc.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ValidationError(std::string("bad JSON field '") + key + "': " + e.what());
    }
}

template <typename T>
T field_or(const json& doc, const char* key, T fallback)
{
    return doc.contains(key) ? field<T>(doc, key) : fallback;
}

Eigen::Vector3d vec3(const json& doc, const char* key)
{
    const auto v = field<std::vector<double>>(doc, key);
    if (v.size() != 3)
        throw ValidationError(std::string("'") + key + "' needs 3 values");
    return {v[0], v[1], v[2]};
}

Index3 ivec3(const json& doc, const char* key)
{
    const auto v = field<std::vector<int>>(doc, key);
    if (v.size() != 3)
        throw ValidationError(std::string("'") + key + "' needs 3 values");
    return {v[0], v[1], v[2]};
}

KineticParams kinetics_from_json(const json& doc)
{
    KineticParams p;
    p.baseline = field<double>(doc, "baseline");
    p.amplitude = field<double>(doc, "amplitude");
    p.onset_time = field_or<double>(doc, "onset_time", 0.0);
    p.time_to_peak = field_or<double>(doc, "time_to_peak", 1.0);
    p.shape = field_or<double>(doc, "shape", 1.0);
    p.region_id = field_or<int>(doc, "region_id", 0);
    return p;
}

json to_json(const KineticParams& p)
{
    return {{"baseline", p.baseline},     {"amplitude", p.amplitude}, {"onset_time", p.onset_time},
            {"time_to_peak", p.time_to_peak}, {"shape", p.shape},     {"region_id", p.region_id}};
}

json vec_json(const Eigen::Vector3d& v)
{
    return json::array({v.x(), v.y(), v.z()});
}

json ivec_json(const Index3& v)
{
    return json::array({v.x(), v.y(), v.z()});
}

} // namespace

json read_json(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError("malformed JSON in " + path.string() + ": " + e.what());
    }
}

void write_json(const std::filesystem::path& path, const json& doc)
{
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot create " + path.string());
    out << doc.dump(2) << '\n';
    if (!out)
        throw IoError("failed writing " + path.string());
}

PreprocessConfig preprocess_config_from_json(const json& doc)
{
    PreprocessConfig c;
    if (doc.contains("target_spacing"))
        c.target_spacing = vec3(doc, "target_spacing");
    if (doc.contains("crop_size")) {
        const auto v = field<std::vector<int>>(doc, "crop_size");
        if (v.size() != 2)
            throw ValidationError("'crop_size' needs 2 values");
        c.crop_size = {v[0], v[1]};
    }
    c.normalize = field_or<bool>(doc, "normalize", true);
    c.validate();
    return c;
}

json to_json(const PreprocessConfig& config)
{
    return {{"target_spacing", vec_json(config.target_spacing)},
            {"crop_size", json::array({config.crop_size.x(), config.crop_size.y()})},
            {"normalize", config.normalize}};
}

PhantomSpec phantom_spec_from_json(const json& doc)
{
    PhantomSpec spec;
    const json& g = doc.at("grid");
    spec.grid = Grid3(ivec3(g, "dims"), vec3(g, "spacing"),
                      g.contains("origin") ? vec3(g, "origin") : Eigen::Vector3d::Zero());
    spec.n_frames = field<int>(doc, "n_frames");
    spec.frame_interval = field<double>(doc, "frame_interval");
    spec.noise_sigma = field_or<double>(doc, "noise_sigma", 0.0);
    spec.seed = field_or<std::uint64_t>(doc, "seed", 0);
    spec.patient_id = field_or<std::string>(doc, "patient_id", "phantom");
    if (doc.contains("background"))
        spec.background = kinetics_from_json(doc.at("background"));
    else
        spec.background = KineticParams{0.0, 0.0, 0.0, 1.0, 1.0, 0};
    for (const json& r : doc.value("regions", json::array())) {
        PhantomRegion region;
        const auto shape = field_or<std::string>(r, "shape", "box");
        if (shape == "box") {
            region.lo = ivec3(r, "lo");
            region.hi = ivec3(r, "hi");
        } else if (shape == "sphere") {
            region.shape = PhantomRegion::Shape::sphere;
            region.center = vec3(r, "center");
            region.radius = field<double>(r, "radius");
        } else {
            throw ValidationError("unknown region shape '" + shape + "'");
        }
        region.kinetics = kinetics_from_json(r.at("kinetics"));
        const auto role = field_or<std::string>(r, "role", "tissue");
        if (role == "tissue")
            region.role = RegionRole::tissue;
        else if (role == "prostate")
            region.role = RegionRole::prostate;
        else if (role == "lesion")
            region.role = RegionRole::lesion;
        else
            throw ValidationError("unknown region role '" + role + "'");
        region.gs = GsGroup(field_or<int>(r, "gs_code", 0));
        spec.regions.push_back(region);
    }
    spec.validate();
    return spec;
}

json to_json(const PhantomSpec& spec)
{
    json regions = json::array();
    for (const auto& r : spec.regions) {
        json j;
        if (r.shape == PhantomRegion::Shape::box) {
            j["shape"] = "box";
            j["lo"] = ivec_json(r.lo);
            j["hi"] = ivec_json(r.hi);
        } else {
            j["shape"] = "sphere";
            j["center"] = vec_json(r.center);
            j["radius"] = r.radius;
        }
        j["kinetics"] = to_json(r.kinetics);
        j["role"] = r.role == RegionRole::lesion     ? "lesion"
                    : r.role == RegionRole::prostate ? "prostate"
                                                     : "tissue";
        j["gs_code"] = r.gs.code();
        regions.push_back(j);
    }
    return {{"grid",
             {{"dims", ivec_json(spec.grid.dims)},
              {"spacing", vec_json(spec.grid.spacing)},
              {"origin", vec_json(spec.grid.origin)}}},
            {"n_frames", spec.n_frames},
            {"frame_interval", spec.frame_interval},
            {"noise_sigma", spec.noise_sigma},
            {"seed", spec.seed},
            {"patient_id", spec.patient_id},
            {"background", to_json(spec.background)},
            {"regions", regions}};
}

std::vector<LesionAnnotation> annotations_from_json(const json& doc)
{
    if (!doc.is_array())
        throw ValidationError("annotation file must hold a JSON array");
    std::vector<LesionAnnotation> out;
    for (const json& a : doc) {
        LesionAnnotation ann;
        ann.id = field<int>(a, "id");
        ann.patient_id = field<std::string>(a, "patient_id");
        ann.gs = GsGroup(field<int>(a, "gs_code"));
        for (const auto& v : field<std::vector<std::vector<int>>>(a, "voxels")) {
            if (v.size() != 3)
                throw ValidationError("annotation voxels need 3 indices");
            ann.voxels.emplace_back(v[0], v[1], v[2]);
        }
        out.push_back(std::move(ann));
    }
    return out;
}

json to_json(const std::vector<LesionAnnotation>& lesions)
{
    json out = json::array();
    for (const auto& l : lesions) {
        json voxels = json::array();
        for (const auto& v : l.voxels)
            voxels.push_back(ivec_json(v));
        out.push_back({{"id", l.id}, {"patient_id", l.patient_id}, {"gs_code", l.gs.code()},
                       {"voxels", voxels}});
    }
    return out;
}

json to_json(const std::vector<RegionTruth>& truth)
{
    json out = json::array();
    for (const auto& t : truth)
        out.push_back({{"region_id", t.region_id},
                       {"peak_time", t.peak_time},
                       {"tmax_frame", t.tmax_frame},
                       {"onset_frame", t.onset_frame},
                       {"wash_in_slope", t.wash_in_slope},
                       {"wash_out_slope", t.wash_out_slope},
                       {"percent_enhancement", t.percent_enhancement}});
    return out;
}

json to_json(const EvalSummary& s)
{
    return {{"kappa", s.kappa},         {"sensi_1fp", s.sensi_1fp}, {"sensi_2fp", s.sensi_2fp},
            {"sensi_max", s.sensi_max}, {"max_fp", s.max_fp},       {"dice_prostate", s.dice_prostate}};
}

} // namespace perfkit
