// Command-line driver: data synthesis, training, evaluation, reports, sweeps.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "ssr/analysis.hpp"
#include "ssr/checkpoint.hpp"
#include "ssr/complexity.hpp"
#include "ssr/error.hpp"
#include "ssr/experiments.hpp"
#include "ssr/train.hpp"

namespace fs = std::filesystem;
using namespace ssr;

namespace {

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string data;
    std::string checkpoint;
    std::string split = "all";
    std::string matrix;
    double tau = 1e-3;
    double q = 0.8;
    std::string power = "l2";
    std::size_t layer = 0;
    std::uint64_t steps = 200;
    std::uint64_t every = 10;
    std::size_t probe = 1024;
    std::string axis;
    std::vector<double> grid;
    std::vector<std::uint64_t> seeds{1, 2, 3};
};

RunConfig run_config(const Options& o) {
    RunConfig c = o.config.empty() ? RunConfig{} : load_run_config(o.config);
    if (o.seed) {
        c.model.seed = *o.seed;
        c.train.seed = *o.seed;
        c.data.seed = *o.seed;
    }
    return c;
}

fs::path out_dir(const Options& o) {
    if (o.out.empty()) return {};
    fs::create_directories(o.out);
    return o.out;
}

// Writes `body` to <out>/<name> when --out is set, otherwise to stdout.
void emit(const Options& o, const std::string& name, const std::string& body) {
    const fs::path dir = out_dir(o);
    if (dir.empty()) {
        std::cout << body;
        return;
    }
    std::ofstream os(dir / name, std::ios::binary);
    if (!os) throw DataError("cannot write " + (dir / name).string());
    os << body;
}

// Loads --data (or generates from the config) and applies the configured split.
Dataset load_dataset(const Options& o, const RunConfig& c) {
    Dataset d;
    if (o.data.empty()) {
        d = generate(c.data).data;
    } else {
        std::ifstream is(o.data);
        if (!is) throw DataError("cannot open " + o.data);
        std::string header;
        std::getline(is, header);
        d = load_csv(o.data, schema_from_header(header));
    }
    split(d, c.split_fractions, c.split_seed);
    return d;
}

int cmd_synth(const Options& o) {
    const RunConfig c = run_config(o);
    const SyntheticData s = generate(c.data);
    std::ostringstream csv;
    write_csv(s.data, csv);
    emit(o, "data.csv", csv.str());
    if (!o.out.empty()) {
        nlohmann::json truth{{"spec", c.data},
                             {"relevant_coordinates", s.relevant},
                             {"relevant_fields", s.relevant_fields},
                             {"bias", s.bias}};
        emit(o, "ground_truth.json", truth.dump(2) + "\n");
    }
    return 0;
}

int cmd_train(const Options& o) {
    const RunConfig c = run_config(o);
    const PreparedData data = prepare(load_dataset(o, c));
    Model model(c.model, data.schema());
    std::ostringstream metrics;
    TrainHooks hooks;
    hooks.metrics = &metrics;
    const MetricsReport val = train(model, data.train, data.val, c.train, hooks);
    nlohmann::json report{{"validation", val}};
    if (data.test.size()) report["test"] = evaluate(model, data.test, c.train.eval_batch_size);
    report["params"] = param_count(c.model, model.input_width()).total();
    report["flops"] = flop_count(c.model, model.input_width());
    emit(o, "metrics.jsonl", metrics.str());
    emit(o, "report.json", report.dump(2) + "\n");
    if (!o.out.empty()) save_checkpoint(model, &data.encoder, out_dir(o) / "checkpoint.json");
    return 0;
}

int cmd_eval(const Options& o) {
    if (o.checkpoint.empty()) throw ConfigError("eval needs --checkpoint");
    if (o.data.empty()) throw ConfigError("eval needs --data");
    Checkpoint ck = load_checkpoint(o.checkpoint);
    if (!ck.encoder) throw DataError("checkpoint carries no feature encoder");
    Dataset d = load_csv(o.data, ck.encoder->schema());
    if (o.split != "all") {
        const RunConfig c = run_config(o);
        split(d, c.split_fractions, c.split_seed);
        const Split s = o.split == "train" ? Split::Train
                        : o.split == "val" ? Split::Val
                        : o.split == "test" ? Split::Test
                                            : throw ConfigError("--split must be all, train, val or test");
        d = d.subset(s);
    }
    const EncodedData rows = ck.encoder->transform(d);
    const MetricsReport r = evaluate(*ck.model, rows);
    std::ostringstream csv;
    csv << "task,rows,auc,gauc,logloss\n";
    for (const auto& t : r.tasks)
        csv << t.task << ',' << rows.size() << ',' << nlohmann::json(t.auc).dump() << ','
            << (t.gauc ? nlohmann::json(*t.gauc).dump() : "") << ',' << nlohmann::json(t.logloss).dump() << '\n';
    emit(o, "eval.csv", csv.str());
    return 0;
}

int cmd_sparsity(const Options& o) {
    if (o.checkpoint.empty()) throw ConfigError("analyze sparsity needs --checkpoint");
    const Checkpoint ck = load_checkpoint(o.checkpoint);
    if (o.power != "l1" && o.power != "l2") throw ConfigError("--power must be l1 or l2");
    const auto rep = report_weight_sparsity(*ck.model, o.matrix, o.tau, o.q,
                                            o.power == "l1" ? PowerMeasure::L1 : PowerMeasure::SquaredL2);
    std::ostringstream csv;
    write_sparsity_csv(rep, csv);
    emit(o, "sparsity.csv", csv.str());
    return 0;
}

int cmd_views(const Options& o) {
    if (o.checkpoint.empty()) throw ConfigError("analyze views needs --checkpoint");
    const Checkpoint ck = load_checkpoint(o.checkpoint);
    std::ostringstream csv;
    write_matrix_csv(report_view_similarity(*ck.model, o.layer), csv);
    emit(o, "view_similarity.csv", csv.str());
    return 0;
}

int cmd_ics(const Options& o) {
    const RunConfig c = run_config(o);
    const PreparedData data = prepare(load_dataset(o, c));
    Model model(c.model, data.schema());
    const auto rows = trace_ics_dynamics(model, data.train, data.val, c.train, o.steps, o.every, o.probe,
                                         mix_seed(c.train.seed, 0x9e0be));
    std::ostringstream csv;
    write_trace_csv(rows, csv);
    emit(o, "ics_trace.csv", csv.str());
    return 0;
}

int cmd_sweep(const Options& o) {
    const RunConfig c = run_config(o);
    const SweepAxis axis = sweep_axis_from_string(o.axis);
    const PreparedData data = prepare(load_dataset(o, c));
    std::ostringstream csv;
    write_sweep_csv(run_sweep(axis, o.grid, c.model, c.train, data), csv);
    emit(o, "sweep_" + o.axis + ".csv", csv.str());
    return 0;
}

int cmd_ablate(const Options& o) {
    const RunConfig c = run_config(o);
    const PreparedData data = prepare(load_dataset(o, c));
    std::ostringstream csv;
    write_ablation_csv(run_ablation_suite(c.model, c.train, data, o.seeds), csv);
    emit(o, "ablation.csv", csv.str());
    return 0;
}

int cmd_complexity(const Options& o) {
    const RunConfig c = run_config(o);
    const std::size_t d_in = (c.data.vocab_sizes.size() + c.data.n_numeric) * c.model.embedding_dim;
    const ParamBreakdown p = param_count(c.model, d_in);
    std::ostringstream csv;
    csv << "quantity,value\n"
        << "d_in," << d_in << '\n'
        << "projection," << p.projection << '\n'
        << "ics," << p.ics << '\n'
        << "fusion_weights," << p.fusion_weights << '\n'
        << "fusion_bias," << p.fusion_bias << '\n'
        << "layer_norm," << p.layer_norm << '\n'
        << "dense," << p.dense << '\n'
        << "heads," << p.heads << '\n'
        << "total_params," << p.total() << '\n'
        << "flops_per_sample," << flop_count(c.model, d_in) << '\n';
    emit(o, "complexity.csv", csv.str());
    return 0;
}

void print_error(const std::string& message, const std::string& kind) {
    std::cerr << nlohmann::json{{"error", message}, {"kind", kind}}.dump() << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Filter-then-fuse recommendation backbone: training, evaluation and analysis"};
    app.require_subcommand(1);
    Options o;
    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "JSON configuration file (model/train/data/split sections)");
        sub->add_option("--seed", o.seed, "Override every seed in the configuration");
        sub->add_option("--out", o.out, "Output directory (stdout when omitted)");
    };
    int (*handler)(const Options&) = nullptr;

    auto* synth = app.add_subcommand("synth", "Generate a planted-sparsity dataset");
    common(synth);
    synth->callback([&] { handler = cmd_synth; });

    auto* trn = app.add_subcommand("train", "Train a model; writes checkpoint, metrics and report");
    common(trn);
    trn->add_option("--data", o.data, "CSV dataset (synthesised from the config when omitted)");
    trn->callback([&] { handler = cmd_train; });

    auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint on a CSV dataset");
    common(ev);
    ev->add_option("--checkpoint", o.checkpoint)->required();
    ev->add_option("--data", o.data)->required();
    ev->add_option("--split", o.split, "all, train, val or test");
    ev->callback([&] { handler = cmd_eval; });

    auto* an = app.add_subcommand("analyze", "Diagnostic reports");
    an->require_subcommand(1);
    auto* sp = an->add_subcommand("sparsity", "Near-zero fraction and mass concentration of a weight matrix");
    common(sp);
    sp->add_option("--checkpoint", o.checkpoint)->required();
    sp->add_option("--matrix", o.matrix, "Parameter name (default: first fusion or dense matrix)");
    sp->add_option("--tau", o.tau, "Near-zero threshold");
    sp->add_option("--q", o.q, "Mass quantile");
    sp->add_option("--power", o.power, "Dimension power: l2 (squared) or l1");
    sp->callback([&] { handler = cmd_sparsity; });
    auto* vw = an->add_subcommand("views", "Cosine similarity of per-view projection matrices");
    common(vw);
    vw->add_option("--checkpoint", o.checkpoint)->required();
    vw->add_option("--layer", o.layer);
    vw->callback([&] { handler = cmd_views; });
    auto* ics = an->add_subcommand("ics", "Train while tracing ICS sparsity and magnitude on a probe batch");
    common(ics);
    ics->add_option("--data", o.data);
    ics->add_option("--steps", o.steps, "Optimizer steps");
    ics->add_option("--every", o.every, "Sampling interval in steps");
    ics->add_option("--probe", o.probe, "Probe batch rows");
    ics->callback([&] { handler = cmd_ics; });

    auto* sw = app.add_subcommand("sweep", "Train one model per grid value along an axis");
    common(sw);
    sw->add_option("--data", o.data);
    sw->add_option("--axis", o.axis, "views, width, depth, iterations, alpha or gamma")->required();
    sw->add_option("--grid", o.grid, "Strictly increasing values")->required()->delimiter(',');
    sw->callback([&] { handler = cmd_sweep; });

    auto* ab = app.add_subcommand("ablate", "Budget-matched ablation table relative to the dynamic model");
    common(ab);
    ab->add_option("--data", o.data);
    ab->add_option("--seeds", o.seeds)->delimiter(',');
    ab->callback([&] { handler = cmd_ablate; });

    auto* cx = app.add_subcommand("complexity", "Closed-form parameter and FLOP counts");
    common(cx);
    cx->callback([&] { handler = cmd_complexity; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        print_error(e.what(), "usage");
        return 2;
    }
    try {
        return handler(o);
    } catch (const Error& e) {
        print_error(e.what(), e.kind());
        return 1;
    } catch (const std::exception& e) {
        print_error(e.what(), "internal");
        return 1;
    }
}
