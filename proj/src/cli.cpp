#include "deepalign/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "deepalign/aligner.hpp"
#include "deepalign/corpus.hpp"
#include "deepalign/evalkit.hpp"
#include "deepalign/neuralnet.hpp"
#include "deepalign/procgen.hpp"
#include "deepalign/rng.hpp"

namespace fs = std::filesystem;

namespace deepalign {

Variant parse_variant(const std::string& text) {
    if (text == "null") return Variant::none;
    if (text == "C") return Variant::C;
    if (text == "E") return Variant::E;
    if (text == "CE") return Variant::CE;
    throw std::invalid_argument("unknown variant: " + text + " (expected null, C, E, or CE)");
}

std::string to_string(Variant v) {
    switch (v) {
        case Variant::none: return "null";
        case Variant::C: return "C";
        case Variant::E: return "E";
        case Variant::CE: return "CE";
    }
    throw std::runtime_error("unknown variant");
}

bool variant_uses_case_attributes(Variant v) { return v == Variant::C || v == Variant::CE; }
bool variant_uses_event_attributes(Variant v) { return v == Variant::E || v == Variant::CE; }

namespace {

void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open file for writing: " + path);
    out << content;
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::string read_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

int max_encoded_length(const EventLog& log) {
    std::size_t longest = 0;
    for (const auto& c : log.cases) longest = std::max(longest, c.events.size());
    return static_cast<int>(longest) + 2;
}

std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(std::stod(item));
    }
    if (out.empty()) throw std::runtime_error("empty list: " + text);
    return out;
}

std::vector<std::string> parse_string_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    if (out.empty()) throw std::runtime_error("empty list: " + text);
    return out;
}

// ---------------------------------------------------------------------------
// generate

struct GenerateArgs {
    std::string process = "paper";
    std::size_t cases = 1000;
    double noise = 0.3;
    std::uint64_t seed = 0;
    std::string out_dir;
    int activities = 10;
    int breadth = 3;
    int depth = 5;
    int event_attrs = 1;
    int case_attrs = 1;
};

nlohmann::ordered_json generate_config_json(const GenerateArgs& a) {
    nlohmann::ordered_json j;
    j["command"] = "generate";
    j["process"] = a.process;
    j["cases"] = a.cases;
    j["noise"] = a.noise;
    j["seed"] = a.seed;
    if (a.process == "random") {
        j["activities"] = a.activities;
        j["breadth"] = a.breadth;
        j["depth"] = a.depth;
        j["event_attrs"] = a.event_attrs;
        j["case_attrs"] = a.case_attrs;
    }
    return j;
}

void run_generate(const GenerateArgs& a) {
    if (a.process != "paper" && a.process != "random" && !fs::exists(a.process))
        throw std::invalid_argument("unknown process: " + a.process +
                                    " (expected paper, random, or a graph file)");
    fs::create_directories(a.out_dir);
    Rng rng(a.seed);

    LikelihoodGraph graph;
    CaseAttributeRule rule;
    if (a.process == "paper") {
        std::tie(graph, rule) = paper_process();
    } else if (a.process == "random") {
        RandomGraphParams params;
        params.n_activities = a.activities;
        params.breadth = a.breadth;
        params.depth = a.depth;
        params.n_event_attrs = a.event_attrs;
        params.n_case_attrs = a.case_attrs;
        std::tie(graph, rule) = random_likelihood_graph(params, rng);
    } else {
        std::tie(graph, rule) = read_graph(a.process);
    }

    EventLog clean = generate_log(graph, rule, a.cases, rng);
    auto [noisy, truth] = apply_noise(clean, a.noise, rng);

    write_graph(graph, rule, (fs::path(a.out_dir) / "graph.json").string());
    write_log(noisy, (fs::path(a.out_dir) / "log.jsonl").string());
    write_log(truth, (fs::path(a.out_dir) / "truth.jsonl").string());
    write_text((fs::path(a.out_dir) / "runconfig.json").string(),
               generate_config_json(a).dump(2) + "\n");
    std::cout << "wrote " << noisy.cases.size() << " cases to " << a.out_dir << "\n";
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
    std::string log_path;
    std::string variant_text = "CE";
    std::uint64_t seed = 0;
    std::string out_prefix;
    int epochs = 50;
    int batch_size = 100;
    double learning_rate = 1e-3;
    double clip_norm = 5.0;
};

nlohmann::ordered_json train_config_json(const TrainArgs& a, Direction dir) {
    nlohmann::ordered_json j;
    j["command"] = "train";
    j["log"] = a.log_path;
    j["variant"] = a.variant_text;
    j["seed"] = a.seed;
    j["direction"] = to_string(dir);
    j["epochs"] = a.epochs;
    j["batch_size"] = a.batch_size;
    j["learning_rate"] = a.learning_rate;
    j["clip_norm"] = a.clip_norm;
    return j;
}

void run_train(const TrainArgs& a) {
    Variant variant = parse_variant(a.variant_text);
    EventLog log = read_log(a.log_path);
    if (log.cases.empty()) throw std::runtime_error("training log is empty");
    const int max_len = max_encoded_length(log);

    nlohmann::ordered_json traces;
    for (Direction dir : {Direction::forward, Direction::backward}) {
        std::uint64_t seed = a.seed + (dir == Direction::backward ? 1 : 0);
        Rng rng(seed);
        NextEventModel model =
            NextEventModel::init(log.schema, dir, max_len, variant_uses_case_attributes(variant),
                                 variant_uses_event_attributes(variant), rng);
        TrainConfig config;
        config.epochs = a.epochs;
        config.batch_size = a.batch_size;
        config.learning_rate = a.learning_rate;
        config.clip_norm = a.clip_norm;
        config.seed = seed;
        TrainResult result = train(model, log, config);

        std::string path = a.out_prefix + (dir == Direction::forward ? ".fwd.ckpt" : ".bwd.ckpt");
        model.save(path, train_config_json(a, dir).dump());
        traces[to_string(dir)] = result.epoch_loss;
        std::cout << "trained " << to_string(dir) << " model (final loss "
                  << result.epoch_loss.back() << ") -> " << path << "\n";
    }
    nlohmann::ordered_json summary;
    summary["config"] = train_config_json(a, Direction::forward);
    summary["config"].erase("direction");
    summary["loss"] = traces;
    write_text(a.out_prefix + ".train.json", summary.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// align

struct AlignArgs {
    std::string log_path;
    std::string fwd_path;
    std::string bwd_path;
    std::string reference_log;
    std::string out_path;
    int beam_width = 5;
    int max_deletions = 3;
    int iterations = 10;
    bool control_flow_only = false;
    int threads = 1;
};

nlohmann::ordered_json align_config_json(const AlignArgs& a) {
    nlohmann::ordered_json j;
    j["command"] = "align";
    j["log"] = a.log_path;
    if (!a.reference_log.empty()) {
        j["reference_log"] = a.reference_log;
    } else {
        j["fwd"] = a.fwd_path;
        j["bwd"] = a.bwd_path;
        j["beam_width"] = a.beam_width;
        j["max_deletions"] = a.max_deletions;
        j["iterations"] = a.iterations;
        j["control_flow_only"] = a.control_flow_only;
    }
    return j;
}

void run_align(const AlignArgs& a) {
    EventLog log = read_log(a.log_path);
    std::vector<AlignmentRecord> records;

    if (!a.reference_log.empty()) {
        // Baseline: optimal alignment against the clean log's variant set.
        EventLog reference = read_log(a.reference_log);
        std::vector<std::vector<std::string>> variants;
        for (const auto& c : reference.cases) variants.push_back(c.activities());
        for (const auto& c : log.cases) {
            AlignmentRecord rec;
            rec.id = c.id;
            rec.alignment = reference_align(c.activities(), variants);
            rec.corrected = model_projection(rec.alignment);
            rec.score = -static_cast<double>(empty_move_count(rec.alignment));
            rec.converged = true;
            rec.iterations = 1;
            records.push_back(std::move(rec));
        }
    } else {
        NextEventModel fwd = NextEventModel::load(a.fwd_path);
        NextEventModel bwd = NextEventModel::load(a.bwd_path, fwd.schema());
        SearchConfig config;
        config.beam_width = a.beam_width;
        config.max_deletion_run = a.max_deletions;
        config.max_iterations = a.iterations;
        config.control_flow_only = a.control_flow_only;
        records = align_log(fwd, bwd, log, config, a.threads);
    }

    write_alignments(records, a.out_path);
    write_text(a.out_path + ".config.json", align_config_json(a).dump(2) + "\n");
    std::cout << "aligned " << records.size() << " cases -> " << a.out_path << "\n";
}

// ---------------------------------------------------------------------------
// complete

struct CompleteArgs {
    std::string fwd_path;
    std::string bwd_path;
    std::vector<std::string> attrs;
    std::string out_path;
    int beam_width = 5;
    int max_deletions = 3;
    int iterations = 10;
};

void run_complete(const CompleteArgs& a) {
    NextEventModel fwd = NextEventModel::load(a.fwd_path);
    NextEventModel bwd = NextEventModel::load(a.bwd_path, fwd.schema());
    std::map<std::string, std::string> case_attrs;
    for (const auto& kv : a.attrs) {
        auto pos = kv.find('=');
        if (pos == std::string::npos)
            throw std::runtime_error("expected NAME=VALUE attribute, got: " + kv);
        case_attrs[kv.substr(0, pos)] = kv.substr(pos + 1);
    }
    SearchConfig config;
    config.beam_width = a.beam_width;
    config.max_deletion_run = a.max_deletions;
    config.max_iterations = a.iterations;
    Case completed = complete_case(fwd, bwd, case_attrs, config);

    std::vector<std::string> acts = completed.activities();
    for (std::size_t i = 0; i < acts.size(); ++i)
        std::cout << (i ? " -> " : "") << acts[i];
    std::cout << "\n";

    if (!a.out_path.empty()) {
        nlohmann::ordered_json j;
        j["case_attrs"] = case_attrs;
        j["sequence"] = acts;
        nlohmann::ordered_json cfg;
        cfg["command"] = "complete";
        cfg["beam_width"] = a.beam_width;
        cfg["max_deletions"] = a.max_deletions;
        cfg["iterations"] = a.iterations;
        j["config"] = cfg;
        write_text(a.out_path, j.dump(2) + "\n");
    }
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateArgs {
    std::string alignments_path;
    std::string truth_path;
    std::string out_path;
    std::string label = "deepalign";
};

void run_evaluate(const EvaluateArgs& a) {
    std::vector<AlignmentRecord> records = read_alignments(a.alignments_path);
    EventLog truth = read_log(a.truth_path);
    EvaluationReport report = evaluate(records, truth);
    nlohmann::ordered_json cfg;
    cfg["command"] = "evaluate";
    cfg["alignments"] = a.alignments_path;
    cfg["truth"] = a.truth_path;
    cfg["label"] = a.label;
    report.config_echo = cfg.dump();
    if (!a.out_path.empty()) write_text(a.out_path, report_to_json(report) + "\n");
    std::cout << report_table(report, a.label);
}

// ---------------------------------------------------------------------------
// sweep

struct SweepArgs {
    std::string out_dir;
    std::uint64_t seed = 0;
    std::string process = "paper";
    std::size_t cases = 1000;
    std::string noise_list = "0.1,0.3,0.5";
    std::string variant_list = "null,CE";
    int epochs = 50;
    int batch_size = 100;
    int threads = 1;
    int beam_width = 5;
    int max_deletions = 3;
    int iterations = 10;
    int activities = 10;
    int breadth = 3;
    int depth = 5;
    int event_attrs = 1;
    int case_attrs = 1;
};

std::string noise_tag(double noise) {
    std::ostringstream tag;
    tag << "n" << std::setw(2) << std::setfill('0')
        << static_cast<int>(std::llround(noise * 100.0));
    return tag.str();
}

int run_sweep(const SweepArgs& a) {
    fs::create_directories(a.out_dir);
    std::vector<double> noises = parse_double_list(a.noise_list);
    std::vector<std::string> variants = parse_string_list(a.variant_list);
    for (const auto& v : variants) parse_variant(v);

    nlohmann::ordered_json sweep_cfg;
    sweep_cfg["command"] = "sweep";
    sweep_cfg["process"] = a.process;
    sweep_cfg["cases"] = a.cases;
    sweep_cfg["noise"] = noises;
    sweep_cfg["variants"] = variants;
    sweep_cfg["seed"] = a.seed;
    sweep_cfg["epochs"] = a.epochs;
    write_text((fs::path(a.out_dir) / "runconfig.json").string(), sweep_cfg.dump(2) + "\n");

    nlohmann::ordered_json results = nlohmann::ordered_json::array();
    bool any_failed = false;

    for (std::size_t ni = 0; ni < noises.size(); ++ni) {
        const double noise = noises[ni];
        fs::path data_dir = fs::path(a.out_dir) / ("data_" + noise_tag(noise));
        fs::path log_path = data_dir / "log.jsonl";
        fs::path truth_path = data_dir / "truth.jsonl";
        try {
            if (!fs::exists(log_path)) {
                GenerateArgs gen;
                gen.process = a.process;
                gen.cases = a.cases;
                gen.noise = noise;
                gen.seed = a.seed + 101 * ni;
                gen.out_dir = data_dir.string();
                gen.activities = a.activities;
                gen.breadth = a.breadth;
                gen.depth = a.depth;
                gen.event_attrs = a.event_attrs;
                gen.case_attrs = a.case_attrs;
                run_generate(gen);
            }
        } catch (const std::exception& e) {
            for (const auto& variant : variants) {
                nlohmann::ordered_json cell;
                cell["noise"] = noise;
                cell["variant"] = variant;
                cell["status"] = std::string("failed: ") + e.what();
                results.push_back(cell);
            }
            any_failed = true;
            continue;
        }

        for (std::size_t vi = 0; vi < variants.size(); ++vi) {
            const std::string& variant = variants[vi];
            fs::path cell_dir =
                fs::path(a.out_dir) / ("cell_" + noise_tag(noise) + "_" + variant);
            fs::path report_path = cell_dir / "report.json";
            nlohmann::ordered_json cell;
            cell["noise"] = noise;
            cell["variant"] = variant;
            cell["dir"] = cell_dir.string();
            try {
                if (fs::exists(report_path)) {
                    cell["status"] = "cached";
                } else {
                    fs::create_directories(cell_dir);
                    TrainArgs tr;
                    tr.log_path = log_path.string();
                    tr.variant_text = variant;
                    tr.seed = a.seed + 1000 * ni + 10 * vi;
                    tr.out_prefix = (cell_dir / "model").string();
                    tr.epochs = a.epochs;
                    tr.batch_size = a.batch_size;
                    run_train(tr);

                    AlignArgs al;
                    al.log_path = log_path.string();
                    al.fwd_path = tr.out_prefix + ".fwd.ckpt";
                    al.bwd_path = tr.out_prefix + ".bwd.ckpt";
                    al.out_path = (cell_dir / "alignments.jsonl").string();
                    al.beam_width = a.beam_width;
                    al.max_deletions = a.max_deletions;
                    al.iterations = a.iterations;
                    al.threads = a.threads;
                    run_align(al);

                    EvaluateArgs ev;
                    ev.alignments_path = al.out_path;
                    ev.truth_path = truth_path.string();
                    ev.out_path = report_path.string();
                    ev.label = "DeepAlign" + std::string(variant == "null" ? "0" : variant);
                    run_evaluate(ev);
                    cell["status"] = "ok";
                }
                EvaluationReport report = report_from_json(read_text(report_path.string()));
                cell["f1_normal"] = report.f1_normal;
                cell["f1_anomalous"] = report.f1_anomalous;
                cell["f1_macro"] = report.f1_macro;
                cell["correction_accuracy"] = report.correction_accuracy;
                cell["error"] = report.mean_levenshtein_incorrect;
                cell["optimality"] = report.optimality_rate;
            } catch (const std::exception& e) {
                cell["status"] = std::string("failed: ") + e.what();
                any_failed = true;
            }
            results.push_back(cell);
        }
    }

    nlohmann::ordered_json summary;
    summary["config"] = sweep_cfg;
    summary["cells"] = results;
    write_text((fs::path(a.out_dir) / "results.json").string(), summary.dump(2) + "\n");

    // Aggregate table: one row per variant, averaged over noise levels.
    std::ostringstream table;
    table << std::left << std::setw(22) << "" << std::right << std::setw(8) << "F1_N"
          << std::setw(8) << "F1_A" << std::setw(8) << "F1" << std::setw(8) << "Error"
          << std::setw(9) << "Optimal" << "\n";
    for (const auto& variant : variants) {
        double f1n = 0, f1a = 0, f1 = 0, err = 0, opt = 0;
        int n = 0;
        for (const auto& cell : results)
            if (cell["variant"] == variant && cell.contains("f1_macro")) {
                f1n += cell["f1_normal"].get<double>();
                f1a += cell["f1_anomalous"].get<double>();
                f1 += cell["f1_macro"].get<double>();
                err += cell["error"].get<double>();
                opt += cell["optimality"].get<double>();
                ++n;
            }
        std::string label = "DeepAlign" + std::string(variant == "null" ? "0" : variant);
        table << std::left << std::setw(22) << label << std::right << std::fixed;
        if (n > 0) {
            table << std::setprecision(4) << std::setw(8) << f1n / n << std::setw(8) << f1a / n
                  << std::setw(8) << f1 / n << std::setprecision(2) << std::setw(8) << err / n
                  << std::setprecision(1) << std::setw(8) << 100.0 * opt / n << "%\n";
        } else {
            table << std::setw(8) << "-" << std::setw(8) << "-" << std::setw(8) << "-"
                  << std::setw(8) << "-" << std::setw(9) << "-" << "\n";
        }
    }
    write_text((fs::path(a.out_dir) / "table.txt").string(), table.str());
    std::cout << table.str();
    return any_failed ? 1 : 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"Event-log anomaly correction with bidirectional sequence models"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Read options from an INI/TOML file");

    GenerateArgs gen;
    CLI::App* cmd_generate = app.add_subcommand("generate", "Generate a noisy log and its ground truth");
    cmd_generate->add_option("--process", gen.process,
                             "paper, random, or a path to a graph JSON file");
    cmd_generate->add_option("--cases", gen.cases, "Number of cases");
    cmd_generate->add_option("--noise", gen.noise, "Fraction of cases to mutate")
        ->check(CLI::Range(0.0, 1.0));
    cmd_generate->add_option("--seed", gen.seed, "Random seed")->required();
    cmd_generate->add_option("--out", gen.out_dir, "Output directory")->required();
    cmd_generate->add_option("--activities", gen.activities, "Random process: activity count");
    cmd_generate->add_option("--breadth", gen.breadth, "Random process: max layer width");
    cmd_generate->add_option("--depth", gen.depth, "Random process: layer count");
    cmd_generate->add_option("--event-attrs", gen.event_attrs, "Random process: event attributes");
    cmd_generate->add_option("--case-attrs", gen.case_attrs, "Random process: case attributes");

    TrainArgs tr;
    CLI::App* cmd_train = app.add_subcommand("train", "Train the two directional models");
    cmd_train->add_option("--log", tr.log_path, "Training log (jsonl)")->required();
    cmd_train->add_option("--variant", tr.variant_text, "null, C, E, or CE");
    cmd_train->add_option("--seed", tr.seed, "Random seed")->required();
    cmd_train->add_option("--out", tr.out_prefix, "Checkpoint path prefix")->required();
    cmd_train->add_option("--epochs", tr.epochs, "Training epochs");
    cmd_train->add_option("--batch", tr.batch_size, "Mini-batch size");
    cmd_train->add_option("--learning-rate", tr.learning_rate, "Adam learning rate");
    cmd_train->add_option("--clip", tr.clip_norm, "Gradient norm clip");

    AlignArgs al;
    CLI::App* cmd_align = app.add_subcommand("align", "Align and correct a log");
    cmd_align->add_option("--log", al.log_path, "Input log (jsonl)")->required();
    cmd_align->add_option("--fwd", al.fwd_path, "Forward checkpoint");
    cmd_align->add_option("--bwd", al.bwd_path, "Backward checkpoint");
    cmd_align->add_option("--reference-log", al.reference_log,
                          "Align against this clean log's variants instead of models");
    cmd_align->add_option("--out", al.out_path, "Output alignments (jsonl)")->required();
    cmd_align->add_option("--beam-width", al.beam_width, "Beam width K");
    cmd_align->add_option("--max-deletions", al.max_deletions, "Max deletion run N");
    cmd_align->add_option("--iterations", al.iterations, "Max search iterations");
    cmd_align->add_flag("--control-flow-only", al.control_flow_only,
                        "Score with the activity head only");
    cmd_align->add_option("--threads", al.threads, "Worker threads");

    CompleteArgs co;
    CLI::App* cmd_complete = app.add_subcommand("complete", "Generate the most likely case");
    cmd_complete->add_option("--fwd", co.fwd_path, "Forward checkpoint")->required();
    cmd_complete->add_option("--bwd", co.bwd_path, "Backward checkpoint")->required();
    cmd_complete->add_option("--attr", co.attrs, "Case attribute NAME=VALUE (repeatable)");
    cmd_complete->add_option("--out", co.out_path, "Optional JSON output path");
    cmd_complete->add_option("--beam-width", co.beam_width, "Beam width K");
    cmd_complete->add_option("--max-deletions", co.max_deletions, "Max deletion run N");
    cmd_complete->add_option("--iterations", co.iterations, "Max search iterations");

    EvaluateArgs ev;
    CLI::App* cmd_evaluate = app.add_subcommand("evaluate", "Score corrections against ground truth");
    cmd_evaluate->add_option("--alignments", ev.alignments_path, "Alignments (jsonl)")->required();
    cmd_evaluate->add_option("--truth", ev.truth_path, "Ground-truth log (jsonl)")->required();
    cmd_evaluate->add_option("--out", ev.out_path, "Report JSON path");
    cmd_evaluate->add_option("--label", ev.label, "Row label for the table");

    SweepArgs sw;
    CLI::App* cmd_sweep = app.add_subcommand("sweep", "Run the noise x variant experiment grid");
    cmd_sweep->add_option("--out", sw.out_dir, "Output directory")->required();
    cmd_sweep->add_option("--seed", sw.seed, "Random seed")->required();
    cmd_sweep->add_option("--process", sw.process, "paper, random, or a graph JSON path");
    cmd_sweep->add_option("--cases", sw.cases, "Cases per dataset");
    cmd_sweep->add_option("--noise", sw.noise_list, "Comma-separated noise levels");
    cmd_sweep->add_option("--variants", sw.variant_list, "Comma-separated variants");
    cmd_sweep->add_option("--epochs", sw.epochs, "Training epochs");
    cmd_sweep->add_option("--batch", sw.batch_size, "Mini-batch size");
    cmd_sweep->add_option("--threads", sw.threads, "Alignment worker threads");
    cmd_sweep->add_option("--beam-width", sw.beam_width, "Beam width K");
    cmd_sweep->add_option("--max-deletions", sw.max_deletions, "Max deletion run N");
    cmd_sweep->add_option("--iterations", sw.iterations, "Max search iterations");
    cmd_sweep->add_option("--activities", sw.activities, "Random process: activity count");
    cmd_sweep->add_option("--breadth", sw.breadth, "Random process: max layer width");
    cmd_sweep->add_option("--depth", sw.depth, "Random process: layer count");
    cmd_sweep->add_option("--event-attrs", sw.event_attrs, "Random process: event attributes");
    cmd_sweep->add_option("--case-attrs", sw.case_attrs, "Random process: case attributes");

    std::vector<const char*> argv;
    argv.push_back("deepalign");
    for (const auto& s : args) argv.push_back(s.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (cmd_generate->parsed()) {
            run_generate(gen);
        } else if (cmd_train->parsed()) {
            run_train(tr);
        } else if (cmd_align->parsed()) {
            if (al.reference_log.empty() && (al.fwd_path.empty() || al.bwd_path.empty())) {
                std::cerr << "align: either --fwd/--bwd or --reference-log is required\n";
                return 2;
            }
            run_align(al);
        } else if (cmd_complete->parsed()) {
            run_complete(co);
        } else if (cmd_evaluate->parsed()) {
            run_evaluate(ev);
        } else if (cmd_sweep->parsed()) {
            return run_sweep(sw);
        }
        return 0;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace deepalign
