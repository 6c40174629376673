// miscrit: fit, score and select GLMs under possible misspecification, and
// run the seeded simulation campaigns.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "miscrit/io/csv.hpp"
#include "miscrit/io/json.hpp"
#include "miscrit/io/render.hpp"
#include "miscrit/miscrit.hpp"

namespace {

using namespace miscrit;

constexpr int exit_ok = 0;
constexpr int exit_input = 2;
constexpr int exit_model = 3;

struct DataArgs {
    std::string input;
    std::string response;
    std::string family = "linear";
    std::vector<std::string> columns;
    bool intercept = false;
    std::vector<double> gammas = default_gamma_grid();
    std::string format = "text";
};

void add_data_options(CLI::App* cmd, DataArgs& args) {
    cmd->add_option("-i,--input", args.input, "CSV file with a header row")->required();
    cmd->add_option("-r,--response", args.response, "response column name or 0-based index")->required();
    cmd->add_option("-f,--family", args.family, "linear, logistic or poisson")
        ->check(CLI::IsMember({"linear", "logistic", "poisson"}));
    cmd->add_option("-c,--columns", args.columns, "covariate columns (default: all but the response)")->delimiter(',');
    cmd->add_flag("--intercept", args.intercept, "prepend a column of ones");
    cmd->add_option("-g,--gamma", args.gammas, "SIC indices to report")->delimiter(',');
    cmd->add_option("--format", args.format, "text, csv or json")->check(CLI::IsMember({"text", "csv", "json"}));
}

/// "1-6" or "1,2,3" or a mix.
std::vector<int> parse_int_list(const std::string& text) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto dash = item.find('-', 1);
        try {
            if (dash == std::string::npos) {
                out.push_back(std::stoi(item));
            } else {
                const int lo = std::stoi(item.substr(0, dash));
                const int hi = std::stoi(item.substr(dash + 1));
                if (hi < lo) throw Error(ErrorCode::invalid_argument, "empty range '" + item + "'");
                for (int k = lo; k <= hi; ++k) out.push_back(k);
            }
        } catch (const std::logic_error&) {
            throw Error(ErrorCode::invalid_argument, "bad integer list '" + text + "'");
        }
    }
    if (out.empty()) throw Error(ErrorCode::invalid_argument, "empty integer list");
    return out;
}

void check_gammas(const std::vector<double>& gammas) {
    for (double g : gammas)
        if (!(g >= 0.0 && g <= 1.0)) throw Error(ErrorCode::domain, "SIC index " + std::to_string(g) + " outside [0, 1]");
}

struct LoadedData {
    io::CsvTable table;
    io::TableData data;
    Family family = Family::linear_estimated();
};

LoadedData load(const DataArgs& args) {
    check_gammas(args.gammas);
    LoadedData out{io::read_csv_file(args.input), {}, Family::from_kind(parse_family_kind(args.family))};
    out.data = io::split_table(out.table, args.response, args.columns);
    io::check_response_support(out.table, out.data, out.family.kind());
    return out;
}

io::json meta_for(const std::string& command, const DataArgs& args, const LoadedData& loaded) {
    return {{"command", command},
            {"family", args.family},
            {"input", args.input},
            {"response", loaded.data.response_name},
            {"covariates", loaded.data.covariate_names},
            {"intercept", args.intercept}};
}

void emit_selection(const SelectionResult& sel, const std::string& format, const io::json& meta,
                    const std::vector<std::string>& names, bool single, const std::string& family) {
    switch (io::parse_format(format)) {
    case io::Format::json: std::cout << io::to_json(sel, meta).dump(2) << "\n"; break;
    case io::Format::csv: io::render_selection_csv(std::cout, sel, names); break;
    case io::Format::text:
        if (single) io::render_fit_text(std::cout, sel, family, names);
        else io::render_selection_text(std::cout, sel, names);
        break;
    }
}

int cmd_fit(const DataArgs& args) {
    const LoadedData loaded = load(args);
    std::vector<int> all(static_cast<std::size_t>(loaded.data.raw.p()));
    for (std::size_t j = 0; j < all.size(); ++j) all[j] = static_cast<int>(j);

    SelectOptions opts;
    opts.gammas = args.gammas;
    const CandidateModel model = CandidateModel::subset(all, args.intercept);
    CandidateOutcome outcome = evaluate_candidate(loaded.data.raw, loaded.family, model, opts);
    if (!outcome.ok()) {
        std::cerr << "error: fit failed: " << outcome.failure << "\n";
        return exit_model;
    }
    const SelectionResult sel =
        assemble_selection({std::move(outcome)}, opts.criteria, static_cast<long>(loaded.data.raw.n()));
    emit_selection(sel, args.format, meta_for("fit", args, loaded), loaded.data.covariate_names, true, args.family);
    return exit_ok;
}

int cmd_select(const DataArgs& args, const std::string& orders, const std::string& sizes,
               const std::vector<std::string>& criteria) {
    const LoadedData loaded = load(args);
    SelectOptions opts;
    opts.gammas = args.gammas;
    if (!criteria.empty()) {
        opts.criteria.clear();
        for (const auto& c : criteria) opts.criteria.push_back(parse_criterion(c));
    }

    SelectionResult sel;
    if (!orders.empty()) {
        if (loaded.data.raw.p() != 1)
            throw Error(ErrorCode::invalid_argument, "--orders needs exactly one covariate column (use --columns)");
        sel = select(polynomial_candidates(parse_int_list(orders), args.intercept), loaded.data.raw, loaded.family, opts);
    } else {
        sel = select_best_subset(loaded.data.raw, parse_int_list(sizes), loaded.family, opts, args.intercept);
    }
    emit_selection(sel, args.format, meta_for("select", args, loaded), loaded.data.covariate_names, false, args.family);
    return exit_ok;
}

int cmd_simulate(const std::string& config_path, std::optional<std::uint64_t> seed, std::optional<int> replicates,
                 const std::string& format) {
    bool has_seed = false;
    SimConfig cfg = io::read_sim_config(config_path, &has_seed);
    if (seed) cfg.seed = *seed;
    else if (!has_seed) {
        cfg.seed = entropy_seed();
        std::cerr << "seed: " << cfg.seed << "\n";
    }
    if (replicates) cfg.replicates = *replicates;
    validate(cfg);

    const FrequencyTable table = run_campaign(cfg, threads_from_env());
    switch (io::parse_format(format)) {
    case io::Format::json: std::cout << io::to_json(table).dump(2) << "\n"; break;
    case io::Format::csv: io::render_table_csv(std::cout, table); break;
    case io::Format::text: io::render_table_text(std::cout, table); break;
    }
    return exit_ok;
}

int cmd_generate(const std::string& experiment, long n, double noise, std::optional<std::uint64_t> seed,
                 const std::string& output) {
    SimConfig cfg;
    cfg.experiment = parse_experiment(experiment);
    cfg.n = n;
    cfg.noise = noise;
    if (n < 1) throw Error(ErrorCode::invalid_argument, "n must be positive");
    if (!(noise >= 0.0)) throw Error(ErrorCode::invalid_argument, "noise must be nonnegative");
    if (seed) cfg.seed = *seed;
    else {
        cfg.seed = entropy_seed();
        std::cerr << "seed: " << cfg.seed << "\n";
    }
    Rng rng(cfg.seed, 0);
    const RawData raw = generate(cfg, rng);

    std::ofstream file;
    if (!output.empty()) {
        file.open(output);
        if (!file) throw Error(ErrorCode::input, "cannot write '" + output + "'");
    }
    std::ostream& os = output.empty() ? std::cout : file;
    os.precision(17);
    if (raw.p() == 1) os << "x";
    else
        for (Eigen::Index j = 0; j < raw.p(); ++j) os << (j ? "," : "") << "x" << (j + 1);
    os << ",y\n";
    for (Eigen::Index i = 0; i < raw.n(); ++i) {
        for (Eigen::Index j = 0; j < raw.p(); ++j) os << raw.x(i, j) << ",";
        os << raw.y[i] << "\n";
    }
    return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Model selection under misspecification: QMLE fits, sandwich contrasts, AIC/BIC/GAIC/GBIC/SIC"};
    app.require_subcommand(1);

    DataArgs fit_args;
    auto* fit = app.add_subcommand("fit", "fit one model and report every criterion");
    add_data_options(fit, fit_args);

    DataArgs sel_args;
    std::string orders, sizes;
    std::vector<std::string> criteria;
    auto* sel = app.add_subcommand("select", "score candidate models and pick one per criterion");
    add_data_options(sel, sel_args);
    auto* orders_opt = sel->add_option("--orders", orders, "polynomial orders, e.g. 1-6 (single covariate)");
    auto* sizes_opt = sel->add_option("--sizes", sizes, "best-subset sizes, e.g. 1-6");
    orders_opt->excludes(sizes_opt);
    sel->add_option("--criteria", criteria, "criteria to select with (AIC,BIC,GAIC,GBIC,SIC,SIC_<g>)")->delimiter(',');

    std::string config_path, sim_format = "text";
    std::optional<std::uint64_t> sim_seed;
    std::optional<int> sim_reps;
    auto* sim = app.add_subcommand("simulate", "run a seeded Monte-Carlo campaign from a JSON config");
    sim->add_option("--config", config_path, "simulation config (JSON)")->required();
    sim->add_option("--seed", sim_seed, "override the config seed");
    sim->add_option("--replicates", sim_reps, "override the replicate count");
    sim->add_option("--format", sim_format, "text, csv or json")->check(CLI::IsMember({"text", "csv", "json"}));

    std::string gen_experiment = "PolyCubic", gen_output;
    long gen_n = 200;
    double gen_noise = 0.5;
    std::optional<std::uint64_t> gen_seed;
    auto* gen = app.add_subcommand("generate", "write one simulated dataset as CSV");
    gen->add_option("--experiment", gen_experiment, "PolyCubic, BestSubsetLinear, Interaction, SingleIndex, HeteroPoly");
    gen->add_option("-n", gen_n, "rows");
    gen->add_option("--sigma,--a", gen_noise, "noise sigma (curvature a for SingleIndex)");
    gen->add_option("--seed", gen_seed, "RNG seed");
    gen->add_option("-o,--output", gen_output, "output path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? exit_ok : exit_input;
    }

    try {
        if (fit->parsed()) return cmd_fit(fit_args);
        if (sel->parsed()) {
            if (orders.empty() && sizes.empty()) {
                std::cerr << "error: select needs --orders or --sizes\n";
                return exit_input;
            }
            return cmd_select(sel_args, orders, sizes, criteria);
        }
        if (sim->parsed()) return cmd_simulate(config_path, sim_seed, sim_reps, sim_format);
        if (gen->parsed()) return cmd_generate(gen_experiment, gen_n, gen_noise, gen_seed, gen_output);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return is_input_error(e.code()) ? exit_input : exit_model;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_model;
    }
    return exit_input;
}
