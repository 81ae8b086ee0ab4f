#include "perfkit/cli.hpp"

#include "perfkit/error.hpp"
#include "perfkit/eval.hpp"
#include "perfkit/json_io.hpp"
#include "perfkit/kinetics.hpp"
#include "perfkit/nifti.hpp"
#include "perfkit/parallel.hpp"
#include "perfkit/phantom.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>

namespace perfkit::cli {

namespace {

std::shared_ptr<spdlog::logger> logger()
{
    static auto log = [] {
        auto l = spdlog::stderr_color_mt("perfkit");
        l->set_pattern("perfkit: %l: %v");
        l->set_level(spdlog::level::warn);
        if (const char* env = std::getenv("PERFKIT_LOG"))
            l->set_level(spdlog::level::from_str(env));
        return l;
    }();
    return log;
}

void ensure_dir(const fs::path& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir))
        throw IoError("cannot create output directory " + dir.string());
}

void require_file(const fs::path& path)
{
    if (!fs::is_regular_file(path))
        throw IoError("no such file: " + path.string());
}

unsigned resolve_jobs(unsigned jobs)
{
    return jobs == 0 ? default_workers() : jobs;
}

std::string format_number(double v)
{
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::ofstream open_out(const fs::path& path)
{
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot create " + path.string());
    return out;
}

} // namespace

std::string patient_id_from_path(const fs::path& path)
{
    std::string stem = nifti_stem(path);
    for (const std::string suffix : {"_prob", "_pred", "_labels", "_label", "_gt", "_seg"}) {
        if (stem.size() > suffix.size() &&
            stem.compare(stem.size() - suffix.size(), suffix.size(), suffix) == 0)
            return stem.substr(0, stem.size() - suffix.size());
    }
    return stem;
}

void cmd_maps(const MapsOptions& options)
{
    require_file(options.dce);
    if (options.timing)
        require_file(*options.timing);
    if (options.mask)
        require_file(*options.mask);
    ensure_dir(options.out_dir);

    const DceSeries series = read_dce(options.dce, options.timing);
    std::optional<Mask> mask;
    if (options.mask)
        mask = read_mask(*options.mask);
    logger()->info("{} frames, {} voxels, time unit {}", series.n_frames(), series.grid().voxel_count(),
                   to_string(series.time_unit()));

    const PerfusionMapSet maps =
        compute_perfusion_maps(series, mask ? &*mask : nullptr, resolve_jobs(options.jobs));
    const std::string stem = nifti_stem(options.dce);
    const fs::path& out = options.out_dir;
    write_nifti(out / (stem + "_tmax.nii.gz"),
                options.tmax_in_time ? tmax_in_time_units(maps, series) : maps.tmax_map);
    write_nifti(out / (stem + "_washin.nii.gz"), maps.wash_in_map);
    write_nifti(out / (stem + "_washout.nii.gz"), maps.wash_out_map);
    write_nifti(out / (stem + "_pctenh.nii.gz"), maps.percent_enhancement_map);
    write_nifti(out / (stem + "_maxslope.nii.gz"), maps.max_slope_volume);
    write_json(out / (stem + "_maps.json"),
               {{"time_unit", to_string(series.time_unit())},
                {"tmax_unit", options.tmax_in_time ? to_string(series.time_unit()) : "frame-index"},
                {"n_frames", series.n_frames()},
                {"max_slope_frame_index", maps.max_slope_frame_index},
                {"degenerate_voxels", maps.degenerate_voxels},
                {"mask", options.mask.has_value()}});
}

void cmd_preprocess(const PreprocessOptions& options)
{
    options.config.validate();
    if (options.inputs.empty())
        throw ValidationError("no input volumes");
    for (const auto& p : options.inputs)
        require_file(p);
    ensure_dir(options.out_dir);

    std::vector<Volume3> inputs;
    for (const auto& p : options.inputs)
        inputs.push_back(read_volume(p));
    if (options.stack) {
        if (inputs.size() < 2)
            throw ValidationError("--stack needs at least 2 input volumes");
        for (std::size_t i = 1; i < inputs.size(); ++i)
            if (!compatible(inputs[i].grid(), inputs.front().grid()))
                throw ValidationError("--stack inputs have mismatched grids: " +
                                      options.inputs[i].string());
    }

    std::vector<Volume3> outputs;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        outputs.push_back(preprocess(inputs[i], options.config));
        write_nifti(options.out_dir / (nifti_stem(options.inputs[i]) + "_pre.nii.gz"), outputs.back());
    }
    if (options.stack)
        write_nifti(options.out_dir / "stack.nii.gz", assemble_channels(outputs));
}

void cmd_eval(const EvalOptions& options)
{
    if (!(options.theta > 0.0 && options.theta < 1.0))
        throw ValidationError("--theta must lie in (0, 1)");
    if (!(options.hit_ratio > 0.0 && options.hit_ratio <= 1.0))
        throw ValidationError("--hit-ratio must lie in (0, 1]");
    if (options.predictions.size() != options.ground_truth.size())
        throw ValidationError("prediction and ground-truth lists differ in length");
    if (options.predictions.empty())
        throw ValidationError("no patients to evaluate");
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < options.predictions.size(); ++i) {
        const std::string pid = patient_id_from_path(options.predictions[i]);
        const std::string gid = patient_id_from_path(options.ground_truth[i]);
        if (pid != gid)
            throw ValidationError("patient id mismatch: prediction '" + pid + "' vs ground truth '" +
                                  gid + "'");
        ids.push_back(pid);
    }
    for (const auto& p : options.predictions)
        require_file(p);
    for (const auto& p : options.ground_truth)
        require_file(p);
    if (options.annotations)
        require_file(*options.annotations);
    ensure_dir(options.out_dir);

    std::vector<LesionAnnotation> annotations;
    if (options.annotations)
        annotations = annotations_from_json(read_json(*options.annotations));

    const std::size_t n = ids.size();
    std::vector<PatientCase> all_cases(n);
    std::vector<PatientCase> froc_cases(n);
    std::vector<double> dices(n);
    parallel_for(n, resolve_jobs(options.jobs), [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const ProbabilityMap probs = read_probability_map(options.predictions[i]);
            const LabelVolume labels = read_labels(options.ground_truth[i]);
            if (!compatible(probs.grid(), labels.grid()))
                throw ValidationError("prediction and ground truth grids differ for patient " + ids[i]);

            PatientCase& c = all_cases[i];
            c.patient_id = ids[i];
            c.grid = labels.grid();
            if (options.annotations) {
                for (const auto& a : annotations)
                    if (a.patient_id == ids[i]) {
                        a.validate(c.grid);
                        c.lesions.push_back(a);
                    }
            } else {
                c.lesions = lesions_from_labels(labels, ids[i]);
            }
            c.candidates = extract_candidates(probs, ids[i], {options.theta, false});
            dices[i] = dice(foreground_mask(probs.argmax()), foreground_mask(labels));

            PatientCase& f = froc_cases[i];
            f.patient_id = c.patient_id;
            f.grid = c.grid;
            if (options.cs_only) {
                f.candidates = extract_candidates(probs, ids[i], {options.theta, true});
                for (const auto& l : c.lesions)
                    if (l.gs.code() >= 2)
                        f.lesions.push_back(l);
            } else {
                f.candidates = c.candidates;
                f.lesions = c.lesions;
            }
        }
    });

    const FrocCurve curve = froc(froc_cases, options.hit_ratio);
    const ConfusionMatrix confusion = lesion_grading_confusion(all_cases, options.hit_ratio);

    EvalSummary summary;
    summary.kappa = quadratic_weighted_kappa(confusion);
    summary.sensi_1fp = sensitivity_at_fp(curve, 1.0);
    summary.sensi_2fp = sensitivity_at_fp(curve, 2.0);
    summary.sensi_max = curve.max_sensitivity();
    summary.max_fp = curve.max_fp();
    double dice_sum = 0.0;
    for (double d : dices)
        dice_sum += d;
    summary.dice_prostate = dice_sum / static_cast<double>(n);

    {
        auto out = open_out(options.out_dir / "froc.csv");
        out << "threshold,fp_per_patient,sensitivity\n";
        for (const auto& p : curve.points)
            out << format_number(p.threshold) << ',' << format_number(p.fp_per_patient) << ','
                << format_number(p.sensitivity) << '\n';
    }
    {
        auto out = open_out(options.out_dir / "confusion.csv");
        out << "truth\\predicted,0,1,2,3,4\n";
        for (Eigen::Index r = 0; r < confusion.rows(); ++r) {
            out << r;
            for (Eigen::Index c = 0; c < confusion.cols(); ++c)
                out << ',' << confusion(r, c);
            out << '\n';
        }
    }
    write_json(options.out_dir / "summary.json", to_json(summary));
    logger()->info("{} patients, {} lesions, kappa {}", curve.n_patients, curve.n_lesions, summary.kappa);
}

void cmd_phantom(const PhantomOptions& options)
{
    PhantomSpec spec = default_phantom_spec();
    if (options.spec) {
        require_file(*options.spec);
        spec = phantom_spec_from_json(read_json(*options.spec));
    }
    if (options.seed)
        spec.seed = *options.seed;
    ensure_dir(options.out_dir);

    const Phantom ph = synth_dce(spec);
    const fs::path& out = options.out_dir;
    const std::string& stem = spec.patient_id;
    const fs::path dce_path = out / (stem + "_dce.nii.gz");
    write_nifti(dce_path, ph.series);
    write_timing(default_timing_path(dce_path), ph.series.times());
    write_nifti(out / (stem + "_labels.nii.gz"), ph.labels);
    write_json(out / (stem + "_annotations.json"), to_json(ph.lesions));
    write_json(out / (stem + "_truth.json"), to_json(ph.truth));
    if (options.perfect_prediction)
        write_nifti(out / (stem + "_prob.nii.gz"), ProbabilityMap::one_hot(ph.labels));
}

int run(const std::vector<std::string>& args)
{
    std::vector<const char*> argv;
    for (const auto& a : args)
        argv.push_back(a.c_str());
    return run(static_cast<int>(argv.size()), argv.data());
}

int run(int argc, const char* const* argv)
{
    CLI::App app{"perfkit: DCE-MR perfusion maps, preprocessing and lesion evaluation"};
    app.require_subcommand(1);

    MapsOptions maps;
    std::string maps_tmax_unit = "frame";
    auto* maps_cmd = app.add_subcommand("maps", "compute the five perfusion maps of a 4D DCE series");
    maps_cmd->add_option("dce", maps.dce, "4D DCE NIfTI")->required();
    maps_cmd->add_option("--timing", maps.timing, "acquisition times, one per line (seconds)");
    maps_cmd->add_option("--mask", maps.mask, "mask restricting the max-slope frame selection");
    maps_cmd->add_option("--out", maps.out_dir, "output directory")->required();
    maps_cmd->add_option("--jobs", maps.jobs, "worker threads (0 = all cores)");
    maps_cmd->add_option("--tmax-unit", maps_tmax_unit, "tmax map unit")
        ->check(CLI::IsMember({"frame", "time"}));

    PreprocessOptions pre;
    std::optional<fs::path> pre_config;
    std::vector<double> pre_spacing;
    std::vector<int> pre_crop;
    bool pre_no_normalize = false;
    auto* pre_cmd = app.add_subcommand("preprocess", "resample, crop and normalize volumes");
    pre_cmd->add_option("inputs", pre.inputs, "3D NIfTI volumes")->required();
    pre_cmd->add_option("--config", pre_config, "PreprocessConfig JSON");
    auto* spacing_opt = pre_cmd->add_option("--target-spacing", pre_spacing, "target spacing (mm)")
                            ->expected(3);
    auto* crop_opt = pre_cmd->add_option("--crop", pre_crop, "in-plane crop size")->expected(2);
    pre_cmd->add_flag("--no-normalize", pre_no_normalize, "skip min-max normalization");
    pre_cmd->add_flag("--stack", pre.stack, "also write a channel stack of all inputs");
    pre_cmd->add_option("--out", pre.out_dir, "output directory")->required();

    EvalOptions ev;
    std::optional<fs::path> ev_config;
    auto* ev_cmd = app.add_subcommand("eval", "FROC, kappa and Dice of lesion segmentations");
    ev_cmd->add_option("--pred", ev.predictions, "6-class probability maps (4D NIfTI)")->required();
    ev_cmd->add_option("--gt", ev.ground_truth, "label volumes (codes 0..5)")->required();
    ev_cmd->add_option("--annotations", ev.annotations, "lesion annotation JSON");
    ev_cmd->add_option("--config", ev_config, "JSON with theta, hit_ratio, cs_only");
    auto* theta_opt = ev_cmd->add_option("--theta", ev.theta, "lesion-mass threshold");
    auto* hit_opt = ev_cmd->add_option("--hit-ratio", ev.hit_ratio, "minimum |cand & gt| / |gt|");
    auto* cs_opt = ev_cmd->add_flag("--cs-only", ev.cs_only, "FROC on clinically significant lesions");
    ev_cmd->add_option("--jobs", ev.jobs, "worker threads (0 = all cores)");
    ev_cmd->add_option("--out", ev.out_dir, "output directory")->required();

    PhantomOptions ph;
    auto* ph_cmd = app.add_subcommand("phantom", "synthesize a gamma-variate DCE phantom");
    ph_cmd->add_option("--spec", ph.spec, "PhantomSpec JSON (default: built-in exam)");
    ph_cmd->add_option("--seed", ph.seed, "noise seed override");
    ph_cmd->add_flag("--perfect-pred", ph.perfect_prediction, "also write a one-hot probability map");
    ph_cmd->add_option("--out", ph.out_dir, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitValidation;
    }

    try {
        if (*maps_cmd) {
            maps.tmax_in_time = maps_tmax_unit == "time";
            cmd_maps(maps);
        } else if (*pre_cmd) {
            if (pre_config) {
                require_file(*pre_config);
                pre.config = preprocess_config_from_json(read_json(*pre_config));
            }
            if (spacing_opt->count())
                pre.config.target_spacing = {pre_spacing[0], pre_spacing[1], pre_spacing[2]};
            if (crop_opt->count())
                pre.config.crop_size = {pre_crop[0], pre_crop[1]};
            if (pre_no_normalize)
                pre.config.normalize = false;
            cmd_preprocess(pre);
        } else if (*ev_cmd) {
            if (ev_config) {
                require_file(*ev_config);
                const json cfg = read_json(*ev_config);
                if (!theta_opt->count())
                    ev.theta = cfg.value("theta", ev.theta);
                if (!hit_opt->count())
                    ev.hit_ratio = cfg.value("hit_ratio", ev.hit_ratio);
                if (!cs_opt->count())
                    ev.cs_only = cfg.value("cs_only", ev.cs_only);
            }
            cmd_eval(ev);
        } else if (*ph_cmd) {
            cmd_phantom(ph);
        }
    } catch (const ValidationError& e) {
        logger()->error("{}", e.what());
        return kExitValidation;
    } catch (const nlohmann::json::exception& e) {
        logger()->error("invalid JSON content: {}", e.what());
        return kExitValidation;
    } catch (const IoError& e) {
        logger()->error("{}", e.what());
        return kExitIo;
    } catch (const fs::filesystem_error& e) {
        logger()->error("{}", e.what());
        return kExitIo;
    }
    return kExitOk;
}

} // namespace perfkit::cli
