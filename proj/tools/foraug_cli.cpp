// foraug command-line front end.
// Exit codes: 0 success, 1 domain failure, 2 I/O or usage failure.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "foraug/foraug.hpp"

namespace fs = std::filesystem;
using namespace foraug;

namespace {

struct ConfigArgs {
    std::string config_path;
    std::vector<std::string> overrides;

    void attach(CLI::App* cmd) {
        cmd->add_option("--config", config_path, "key=value config file (defaults: final large-scale setting)");
        cmd->add_option("--set", overrides, "override one config key, e.g. --set eta=-2")->take_all();
    }

    RecombinationConfig resolve() const {
        RecombinationConfig c = config_path.empty() ? RecombinationConfig{} : load_config(config_path);
        for (const auto& kv : overrides) {
            apply_assignment(c, kv);
        }
        c.validate();
        return c;
    }
};

void ensure_dir(const fs::path& p) {
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec) {
        throw IoError("cannot create directory " + p.string() + ": " + ec.message());
    }
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    out.close();
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
}

std::pair<std::int64_t, std::int64_t> parse_epoch_range(const std::string& s) {
    const auto colon = s.find(':');
    try {
        if (colon == std::string::npos) {
            const std::int64_t e = std::stoll(s);
            return {e, e + 1};
        }
        return {std::stoll(s.substr(0, colon)), std::stoll(s.substr(colon + 1))};
    } catch (const std::exception&) {
        throw InputError("epoch range must be N or A:B, got '" + s + "'");
    }
}

std::string sample_name(const SamplePlan& p, ImageFormat format) {
    return std::to_string(p.index) + "_" + p.fg_id + (format == ImageFormat::png ? ".png" : ".jpg");
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------

int cmd_validate(const std::string& manifest_dir, bool check_images) {
    const AssetManifest m = load_manifest(manifest_dir);
    const ValidationReport report = validate(m, check_images);
    if (report.ok()) {
        std::cout << "ok: " << m.foregrounds.size() << " foregrounds, " << m.backgrounds.size() << " backgrounds, "
                  << m.pair_count() << " pairs\n";
        return 0;
    }
    std::cout << report.to_string();
    return 1;
}

int cmd_build_manifest(const std::string& fg_root, const std::string& bg_root, const std::string& sidecar,
                       const std::string& out, bool verify) {
    BuildOptions opt;
    opt.verify_images = verify;
    const AssetManifest m = build_manifest(fg_root, bg_root, sidecar, opt);
    save_manifest(m, out);
    std::cout << "manifest: " << m.foregrounds.size() << " foregrounds, " << m.backgrounds.size()
              << " backgrounds, " << m.pair_count() << " pairs\n";
    return 0;
}

int cmd_prune(const std::string& manifest_dir, double t_prune, const std::string& out) {
    const AssetManifest m = load_manifest(manifest_dir);
    const AssetManifest pruned = prune_backgrounds(m, t_prune);
    save_manifest(pruned, out);
    std::cout << "kept " << pruned.backgrounds.size() << " of " << m.backgrounds.size() << " backgrounds\n";
    return 0;
}

int cmd_plan(const std::string& manifest_dir, const RecombinationConfig& config, std::int64_t epoch,
             const std::string& out) {
    const AssetManifest m = prune_backgrounds(load_manifest(manifest_dir), config.t_prune);
    const EpochPlan plan = plan_epoch(m, config, epoch);
    std::ostringstream text;
    for (const auto& p : plan.plans) {
        text << plan_to_line(p) << '\n';
    }
    if (out.empty() || out == "-") {
        std::cout << text.str();
    } else {
        write_text(out, text.str());
    }
    return 0;
}

struct GenerateArgs {
    std::string manifest;
    std::string out;
    std::string epochs = "0:1";
    unsigned workers = 1;
    std::string format = "png";
    std::string resume;
};

int cmd_generate(const GenerateArgs& a, const RecombinationConfig& config) {
    if (a.workers < 1) {
        throw InputError("workers must be at least 1");
    }
    if (a.format != "png" && a.format != "jpeg" && a.format != "jpg") {
        throw InputError("format must be png or jpeg");
    }
    const ImageFormat format = a.format == "png" ? ImageFormat::png : ImageFormat::jpeg;
    const auto [e0, e1] = parse_epoch_range(a.epochs);
    if (e0 < 0 || e1 > config.total_epochs || e0 >= e1) {
        throw InputError("epoch range must satisfy 0 <= A < B <= total_epochs (" +
                         std::to_string(config.total_epochs) + ")");
    }
    const AssetManifest m = prune_backgrounds(load_manifest(a.manifest), config.t_prune);
    const std::size_t n = m.foregrounds.size();
    const std::size_t epochs = static_cast<std::size_t>(e1 - e0);
    const std::size_t total = n * epochs;

    std::size_t start = 0;
    if (!a.resume.empty()) {
        const auto colon = a.resume.find(':');
        std::int64_t r_epoch = 0;
        std::int64_t r_index = 0;
        try {
            r_epoch = std::stoll(a.resume.substr(0, colon));
            r_index = colon == std::string::npos ? 0 : std::stoll(a.resume.substr(colon + 1));
        } catch (const std::exception&) {
            throw InputError("resume token must be epoch:index, got '" + a.resume + "'");
        }
        if (r_epoch < e0 || r_epoch >= e1 || r_index < 0 || static_cast<std::size_t>(r_index) > n) {
            throw InputError("resume token " + a.resume + " outside the requested range");
        }
        start = static_cast<std::size_t>(r_epoch - e0) * n + static_cast<std::size_t>(r_index);
    }

    const fs::path root(a.out);
    ensure_dir(root);
    write_text(root / "config.txt", config_to_string(config));

    AssetImages images(m);
    images.preload();
    const AugPipeline pipeline = make_pipeline(config.augment, config.image_size);

    std::vector<SamplePlan> plans(total);
    for (std::size_t k = 0; k < total; ++k) {
        plans[k] = plan_sample(m, config, e0 + static_cast<std::int64_t>(k / n), k % n);
    }
    for (std::int64_t e = e0; e < e1; ++e) {
        ensure_dir(root / std::to_string(e));
        std::ostringstream text;
        for (std::size_t i = 0; i < n; ++i) {
            text << plan_to_line(plans[static_cast<std::size_t>(e - e0) * n + i]) << '\n';
        }
        write_text(root / std::to_string(e) / "plans.jsonl", text.str());
    }

    std::vector<std::string> sums(total);
    std::vector<std::atomic<bool>> done(total);
    const auto t0 = std::chrono::steady_clock::now();
    std::atomic<std::size_t> finished{0};
    try {
        parallel_for(total - start, a.workers, [&](std::size_t j) {
            const std::size_t k = start + j;
            const SamplePlan& p = plans[k];
            const fs::path file = root / std::to_string(p.epoch) / sample_name(p, format);
            const RgbImage img = render(p, m, config, pipeline, images);
            save_rgb(file.string(), img, format);
            sums[k] = sha256_file(file.string());
            done[k] = true;
            const std::size_t f = ++finished;
            if (f % 1000 == 0) {
                std::cerr << "progress: " << f << "/" << (total - start) << '\n';
            }
        });
    } catch (const IoError& e) {
        std::size_t first = start;
        while (first < total && done[first]) {
            ++first;
        }
        const std::string token =
            std::to_string(e0 + static_cast<std::int64_t>(first / n)) + ":" + std::to_string(first % n);
        throw IoError(std::string(e.what()) + "\npartial output; resume with --resume " + token);
    }
    const double secs = seconds_since(t0);

    for (std::size_t k = 0; k < start; ++k) {
        const fs::path file = root / std::to_string(plans[k].epoch) / sample_name(plans[k], format);
        if (!fs::exists(file)) {
            throw IoError("resume: earlier output missing: " + file.string());
        }
        sums[k] = sha256_file(file.string());
    }
    std::ostringstream sumtext;
    for (std::size_t k = 0; k < total; ++k) {
        sumtext << sums[k] << "  " << plans[k].epoch << '/' << sample_name(plans[k], format) << '\n';
    }
    write_text(root / "SHA256SUMS", sumtext.str());

    const std::size_t rendered = total - start;
    std::cerr << "generated " << rendered << " images in " << plot::fmt(secs, 3) << " s ("
              << plot::fmt(secs > 0 ? rendered / secs : 0.0, 1) << " images/s, " << a.workers << " workers)\n";
    std::cout << sha256_hex(std::span(reinterpret_cast<const std::uint8_t*>(sumtext.str().data()),
                                      sumtext.str().size()))
              << '\n';
    return 0;
}

int cmd_score_variants(const std::string& input, const std::string& out, const ScoreParams& params,
                       bool merge, double merge_threshold) {
    std::ifstream in(input);
    if (!in) {
        throw IoError("cannot open " + input);
    }
    const fs::path base = fs::path(input).parent_path();
    std::map<std::string, std::vector<VariantCandidate>> groups;
    std::vector<std::string> order;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        const std::string where = input + ":" + std::to_string(line_no) + ": ";
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw InputError(where + e.what());
        }
        VariantCandidate v;
        std::string source;
        try {
            source = j.at("source_image_id").get<std::string>();
            const fs::path mask_path = base / j.at("mask").get<std::string>();
            v.mask = load_mask(mask_path.string());
            v.fg_probs = j.at("fg_probs").get<std::vector<double>>();
            v.bg_probs = j.at("bg_probs").get<std::vector<double>>();
            v.fg_size = j.contains("fg_size") ? j["fg_size"].get<double>() : static_cast<double>(v.mask.count());
            v.bg_size = j.contains("bg_size") ? j["bg_size"].get<double>() : static_cast<double>(v.mask.area());
        } catch (const nlohmann::json::exception& e) {
            throw InputError(where + e.what());
        }
        if (!groups.contains(source)) {
            order.push_back(source);
        }
        groups[source].push_back(std::move(v));
    }

    std::ostringstream text;
    int status = 0;
    for (const auto& source : order) {
        const auto& variants = groups[source];
        nlohmann::ordered_json r;
        r["source_image_id"] = source;
        if (merge) {
            std::vector<Mask> masks;
            for (const auto& v : variants) masks.push_back(v.mask);
            r["merged_mask_count"] = merge_masks(masks, merge_threshold).size();
        }
        r["scores"] = nlohmann::ordered_json::array();
        for (const auto& v : variants) {
            const double s = variant_score(v, params);
            r["scores"].push_back(std::isinf(s) ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(s));
        }
        try {
            r["selected"] = select_best_variant(variants, params);
        } catch (const InputError& e) {
            r["selected"] = nullptr;
            r["error"] = e.what();
            status = 1;
        }
        text << r.dump() << '\n';
    }
    if (out.empty() || out == "-") {
        std::cout << text.str();
    } else {
        write_text(out, text.str());
    }
    return status;
}

std::vector<EvalRecord> load_all_records(const std::vector<std::string>& paths) {
    std::vector<EvalRecord> all;
    for (const auto& p : paths) {
        auto r = load_eval_records(p);
        all.insert(all.end(), r.begin(), r.end());
    }
    if (all.empty()) {
        throw InputError("no evaluation records");
    }
    return all;
}

int cmd_metrics(const std::string& kind, const std::vector<std::string>& records, const std::string& pairs,
                const std::string& out) {
    const fs::path root(out);
    ensure_dir(root);
    BiasReport report;
    std::ostringstream csv;
    RgbImage chart;
    double headline = 0.0;

    if (kind == "bg") {
        const auto all = load_all_records(records);
        const auto [rec_all, rec_same] = split_by_background(all);
        headline = background_robustness(rec_all, rec_same);
        report.background_robustness = headline;
        report.sample_counts["bg_strategy=all"] = rec_all.size();
        report.sample_counts["bg_strategy=same_class"] = rec_same.size();
        csv << "condition,accuracy,count\n"
            << "same_class," << accuracy(rec_same) << ',' << rec_same.size() << '\n'
            << "all," << accuracy(rec_all) << ',' << rec_all.size() << '\n';
        chart = plot::bar_chart({accuracy(rec_same), accuracy(rec_all), headline});
    } else if (kind == "focus") {
        if (pairs.empty()) {
            throw InputError("metrics focus needs --pairs (CSV of importance_path,mask_path)");
        }
        std::ifstream in(pairs);
        if (!in) {
            throw IoError("cannot open " + pairs);
        }
        const fs::path base = fs::path(pairs).parent_path();
        std::vector<double> values;
        std::string line;
        std::size_t line_no = 0;
        csv << "index,importance,mask,foreground_focus\n";
        while (std::getline(in, line)) {
            ++line_no;
            if (line.find_first_not_of(" \t\r") == std::string::npos || line.rfind("importance", 0) == 0) {
                continue;
            }
            const auto comma = line.find(',');
            if (comma == std::string::npos) {
                throw InputError(pairs + ":" + std::to_string(line_no) + ": expected importance_path,mask_path");
            }
            std::string ip = line.substr(0, comma);
            std::string mp = line.substr(comma + 1);
            if (!mp.empty() && mp.back() == '\r') mp.pop_back();
            double f = 0.0;
            try {
                f = foreground_focus(load_importance((base / ip).string()), load_mask((base / mp).string()));
            } catch (const InputError& e) {
                throw InputError(pairs + ":" + std::to_string(line_no) + ": " + e.what());
            }
            csv << values.size() << ',' << ip << ',' << mp << ',' << nlohmann::json(f).dump() << '\n';
            values.push_back(f);
        }
        if (values.empty()) {
            throw InputError("no importance/mask pairs in " + pairs);
        }
        double sum = 0.0;
        for (double v : values) sum += v;
        headline = sum / static_cast<double>(values.size());
        report.foreground_focus = headline;
        report.sample_counts["images"] = values.size();
        chart = plot::bar_chart(values);
    } else if (kind == "center") {
        const auto all = load_all_records(records);
        const CellGrid acc = cell_accuracies(all, &report.sample_counts);
        headline = center_bias(acc);
        report.center_bias = headline;
        report.cell_grid = relative_cell_grid(acc);
        csv << "row,col,accuracy,relative_accuracy\n";
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c) {
                csv << r << ',' << c << ',' << acc[r][c] << ',' << (*report.cell_grid)[r][c] << '\n';
            }
        }
        chart = plot::heatmap3(*report.cell_grid);
    } else if (kind == "size") {
        const auto all = load_all_records(records);
        const auto groups = group_by_size(all);
        report.size_curve = size_bias_curve(groups);
        csv << "f_size,accuracy,relative_accuracy,count\n";
        for (const auto& [f, rel] : report.size_curve) {
            const auto& g = groups.at(f);
            report.sample_counts["size_factor=" + nlohmann::json(f).dump()] = g.size();
            csv << nlohmann::json(f).dump() << ',' << accuracy(g) << ',' << rel << ',' << g.size() << '\n';
        }
        headline = 1.0;
        chart = plot::line_chart(report.size_curve);
    } else {
        throw InputError("unknown metric kind '" + kind + "' (bg | focus | center | size)");
    }

    write_text(root / (kind + "_report.json"), report_to_json(report).dump(2) + "\n");
    write_text(root / (kind + ".csv"), csv.str());
    save_png((root / (kind + ".png")).string(), chart);
    if (kind == "size") {
        for (const auto& [f, rel] : report.size_curve) {
            std::cout << "f_size " << f << ": " << rel << '\n';
        }
    } else {
        std::cout << nlohmann::json(headline).dump() << '\n';
    }
    return 0;
}

int cmd_probe(const std::string& kind_name, const std::string& manifest_dir, const RecombinationConfig& config,
              const std::vector<double>& factors, const std::string& out, bool do_render, unsigned workers) {
    const ProbeKind kind = parse_probe_kind(kind_name);
    const AssetManifest m = prune_backgrounds(load_manifest(manifest_dir), config.t_prune);
    const std::vector<SamplePlan> plans = probe_set(m, config, kind, factors);
    const fs::path root(out);
    ensure_dir(root);
    write_text(root / "config.txt", config_to_string(config));
    std::ostringstream jsonl;
    std::ostringstream index;
    index << "sample_id,fg_id,true_class,condition_tag,condition_value\n";
    for (const auto& p : plans) {
        jsonl << plan_to_line(p) << '\n';
        index << p.index << '_' << p.fg_id << ',' << p.fg_id << ',' << m.foregrounds[p.fg_index].class_id << ','
              << condition_tag(*p.probe) << ',' << condition_value(*p.probe) << '\n';
    }
    write_text(root / "plans.jsonl", jsonl.str());
    write_text(root / "probe_index.csv", index.str());
    if (do_render) {
        ensure_dir(root / "images");
        AssetImages images(m);
        images.preload();
        parallel_for(plans.size(), workers, [&](std::size_t k) {
            const RgbImage img = render(plans[k], m, config, {}, images);
            save_png((root / "images" / sample_name(plans[k], ImageFormat::png)).string(), img);
        });
    }
    std::cout << plans.size() << " probe plans\n";
    return 0;
}

struct BenchArgs {
    std::vector<unsigned> workers = {1, 2, 4, 8};
    int classes = 2;
    int per_class = 50;
    int epochs = 1;
    std::string out;
};

int cmd_bench(const BenchArgs& a, RecombinationConfig config) {
    SynthOptions opt;
    opt.n_classes = a.classes;
    opt.per_class = a.per_class;
    opt.seed = config.seed;
    const SynthCorpus corpus = synth_corpus(opt);
    const AssetManifest m = prune_backgrounds(corpus.manifest, config.t_prune);
    AssetImages images(m);
    corpus.add_to(images);
    config.total_epochs = std::max(config.total_epochs, a.epochs);
    const AugPipeline pipeline = make_pipeline(config.augment, config.image_size);
    const std::size_t n = m.foregrounds.size();
    const std::size_t total = n * static_cast<std::size_t>(a.epochs);

    std::ostringstream csv;
    csv << "workers,images,seconds,images_per_sec,checksum\n";
    std::string reference;
    bool identical = true;
    for (unsigned w : a.workers) {
        if (w < 1) {
            throw InputError("worker counts must be at least 1");
        }
        std::vector<std::string> sums(total);
        const auto t0 = std::chrono::steady_clock::now();
        parallel_for(total, w, [&](std::size_t k) {
            const SamplePlan p = plan_sample(m, config, static_cast<std::int64_t>(k / n), k % n);
            sums[k] = sha256_hex(render(p, m, config, pipeline, images).bytes());
        });
        const double secs = seconds_since(t0);
        std::string joined;
        for (const auto& s : sums) joined += s;
        const std::string checksum =
            sha256_hex(std::span(reinterpret_cast<const std::uint8_t*>(joined.data()), joined.size()));
        if (reference.empty()) {
            reference = checksum;
        } else if (checksum != reference) {
            identical = false;
        }
        csv << w << ',' << total << ',' << plot::fmt(secs, 4) << ',' << plot::fmt(secs > 0 ? total / secs : 0.0, 2)
            << ',' << checksum << '\n';
    }
    std::cout << csv.str();
    if (!a.out.empty()) {
        write_text(a.out, csv.str());
    }
    if (!identical) {
        std::cerr << "error: outputs differ across worker counts\n";
        return 1;
    }
    return 0;
}

int cmd_synth(const std::string& out, int classes, int per_class, std::uint64_t seed) {
    SynthOptions opt;
    opt.n_classes = classes;
    opt.per_class = per_class;
    opt.seed = seed;
    const AssetManifest m = write_synth_corpus(out, opt);
    std::cout << "wrote " << m.foregrounds.size() << " foregrounds and " << m.backgrounds.size()
              << " backgrounds; manifest at " << (fs::path(out) / "manifest").string() << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"foreground/background recombination engine"};
    app.require_subcommand(1);

    std::string manifest;
    bool no_images = false;
    auto* validate_cmd = app.add_subcommand("validate", "check manifest invariants");
    validate_cmd->add_option("--manifest", manifest, "manifest directory")->required();
    validate_cmd->add_flag("--no-images", no_images, "skip decoding images");

    std::string fg_root, bg_root, sidecar, out;
    bool no_verify = false;
    auto* build_cmd = app.add_subcommand("build-manifest", "ingest asset directories and a sidecar file");
    build_cmd->add_option("--fg-root", fg_root)->required();
    build_cmd->add_option("--bg-root", bg_root)->required();
    build_cmd->add_option("--sidecar", sidecar)->required();
    build_cmd->add_option("--out", out, "manifest output directory")->required();
    build_cmd->add_flag("--no-verify", no_verify, "do not decode images");

    double t_prune = 0.8;
    auto* prune_cmd = app.add_subcommand("prune", "drop backgrounds infilled above t_prune");
    prune_cmd->add_option("--manifest", manifest)->required();
    prune_cmd->add_option("--t-prune", t_prune, "threshold")->capture_default_str();
    prune_cmd->add_option("--out", out, "pruned manifest directory")->required();

    ConfigArgs plan_cfg;
    std::int64_t epoch = 0;
    auto* plan_cmd = app.add_subcommand("plan", "print one epoch's sample plans as JSON lines");
    plan_cmd->add_option("--manifest", manifest)->required();
    plan_cfg.attach(plan_cmd);
    plan_cmd->add_option("--epoch", epoch)->capture_default_str();
    plan_cmd->add_option("--out", out, "output file (default stdout)");

    ConfigArgs gen_cfg;
    GenerateArgs gen;
    auto* gen_cmd = app.add_subcommand("generate", "render epochs to disk");
    gen_cmd->add_option("--manifest", gen.manifest)->required();
    gen_cfg.attach(gen_cmd);
    gen_cmd->add_option("--out", gen.out)->required();
    gen_cmd->add_option("--epochs", gen.epochs, "A:B half-open range or a single epoch")->capture_default_str();
    gen_cmd->add_option("--workers", gen.workers)->capture_default_str();
    gen_cmd->add_option("--format", gen.format, "png | jpeg")->capture_default_str();
    gen_cmd->add_option("--resume", gen.resume, "epoch:index token printed by a failed run");

    std::string input;
    ScoreParams score_params;
    bool merge = false;
    double merge_threshold = 0.9;
    auto* score_cmd = app.add_subcommand("score-variants", "score candidate variants and pick one per source");
    score_cmd->add_option("--input", input, "JSON lines of candidates")->required();
    score_cmd->add_option("--out", out, "output file (default stdout)");
    score_cmd->add_option("--lambda", score_params.lambda)->capture_default_str();
    score_cmd->add_option("--epsilon", score_params.epsilon)->capture_default_str();
    score_cmd->add_option("--log-base", score_params.log_base)->capture_default_str();
    score_cmd->add_flag("--merge", merge, "also report the merged mask count per source");
    score_cmd->add_option("--merge-threshold", merge_threshold)->capture_default_str();

    std::string metric_kind;
    std::vector<std::string> records;
    std::string pairs;
    auto* metrics_cmd = app.add_subcommand("metrics", "bias metrics: bg | focus | center | size");
    metrics_cmd->add_option("kind", metric_kind)->required()->check(CLI::IsMember({"bg", "focus", "center", "size"}));
    metrics_cmd->add_option("--records", records, "evaluation record CSV files");
    metrics_cmd->add_option("--pairs", pairs, "focus: CSV of importance_path,mask_path");
    metrics_cmd->add_option("--out", out, "report directory")->required();

    std::string probe_kind;
    ConfigArgs probe_cfg;
    std::vector<double> factors = {0.5, 1.0, 2.0};
    bool probe_render = false;
    unsigned probe_workers = 1;
    auto* probe_cmd = app.add_subcommand("probe", "evaluation plans: bg_swap | grid | size_sweep");
    probe_cmd->add_option("kind", probe_kind)->required()->check(CLI::IsMember({"bg_swap", "grid", "size_sweep"}));
    probe_cmd->add_option("--manifest", manifest)->required();
    probe_cfg.attach(probe_cmd);
    probe_cmd->add_option("--factors", factors, "size_sweep factors")->delimiter(',')->capture_default_str();
    probe_cmd->add_option("--out", out)->required();
    probe_cmd->add_flag("--render", probe_render, "also render the probe images (no augmentation)");
    probe_cmd->add_option("--workers", probe_workers)->capture_default_str();

    ConfigArgs bench_cfg;
    BenchArgs bench;
    auto* bench_cmd = app.add_subcommand("bench", "render a fixed synthetic workload per worker count");
    bench_cfg.attach(bench_cmd);
    bench_cmd->add_option("--workers", bench.workers)->delimiter(',')->capture_default_str();
    bench_cmd->add_option("--classes", bench.classes)->capture_default_str();
    bench_cmd->add_option("--per-class", bench.per_class)->capture_default_str();
    bench_cmd->add_option("--epochs", bench.epochs)->capture_default_str();
    bench_cmd->add_option("--out", bench.out, "also write the CSV here");

    int classes = 2, per_class = 10;
    std::uint64_t seed = 0;
    auto* synth_cmd = app.add_subcommand("synth-corpus", "write a synthetic shapes corpus and its manifest");
    synth_cmd->add_option("--out", out)->required();
    synth_cmd->add_option("--classes", classes)->capture_default_str();
    synth_cmd->add_option("--per-class", per_class)->capture_default_str();
    synth_cmd->add_option("--seed", seed)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*validate_cmd) return cmd_validate(manifest, !no_images);
        if (*build_cmd) return cmd_build_manifest(fg_root, bg_root, sidecar, out, !no_verify);
        if (*prune_cmd) return cmd_prune(manifest, t_prune, out);
        if (*plan_cmd) return cmd_plan(manifest, plan_cfg.resolve(), epoch, out);
        if (*gen_cmd) return cmd_generate(gen, gen_cfg.resolve());
        if (*score_cmd) return cmd_score_variants(input, out, score_params, merge, merge_threshold);
        if (*metrics_cmd) return cmd_metrics(metric_kind, records, pairs, out);
        if (*probe_cmd) {
            return cmd_probe(probe_kind, manifest, probe_cfg.resolve(), factors, out, probe_render, probe_workers);
        }
        if (*bench_cmd) return cmd_bench(bench, bench_cfg.resolve());
        if (*synth_cmd) return cmd_synth(out, classes, per_class, seed);
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
