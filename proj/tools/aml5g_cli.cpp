// Command-line front end: run a config, validate a config, or rebuild the
// spoofing and defense tables from defaults.

#include <aml5g/harness.hpp>

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace {

using namespace aml5g;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::io_error, "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct OutputOptions {
    std::string out_dir;
    std::string format = "csv";

    ReportFormat report_format() const { return format == "md" ? ReportFormat::Markdown : ReportFormat::Csv; }

    // --out wins over AML5G_OUT_DIR; neither means stdout.
    std::string resolved_dir() const {
        if (!out_dir.empty()) return out_dir;
        if (const char* env = std::getenv("AML5G_OUT_DIR"); env && *env) return env;
        return {};
    }

    void write(const MetricsReport& r, const std::string& stem) const {
        const std::string body = emit_report(r, report_format());
        const std::string dir = resolved_dir();
        if (dir.empty()) {
            std::cout << body;
            return;
        }
        std::filesystem::create_directories(dir);
        const auto path = std::filesystem::path(dir) / (stem + (format == "md" ? ".md" : ".csv"));
        std::ofstream f(path, std::ios::binary);
        if (!f) throw Error(Errc::io_error, "cannot write " + path.string());
        f << body;
        std::cerr << "wrote " << path.string() << '\n';
    }
};

struct SeedOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<int> seeds;

    void apply(ExperimentConfig& c) const {
        if (seed) c.seed = *seed;
        if (seeds) c.n_seeds = *seeds;
        c.validate();
    }
};

std::string stem_for(const ExperimentConfig& c) {
    std::string s(to_string(c.scenario));
    for (auto& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    return s;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adversarial machine learning attacks and defense on a simulated 5G system"};
    app.require_subcommand(1);

    OutputOptions out;
    SeedOverrides ov;
    unsigned threads = 1;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--seed", ov.seed, "First seed");
        sub->add_option("--seeds", ov.seeds, "Number of seeds")->check(CLI::PositiveNumber);
        sub->add_option("--out", out.out_dir, "Output directory (overrides AML5G_OUT_DIR)");
        sub->add_option("--format", out.format, "Report format")->check(CLI::IsMember({"csv", "md"}));
        sub->add_option("--threads", threads, "Seeds run concurrently")->check(CLI::PositiveNumber);
    };

    std::string config_path;
    auto* run = app.add_subcommand("run", "Run the experiment described by a config file");
    run->add_option("config", config_path, "Config file")->required();
    add_common(run);

    std::string validate_path;
    auto* validate = app.add_subcommand("validate", "Parse a config and print it with every default filled in");
    validate->add_option("config", validate_path, "Config file")->required();

    auto* tables = app.add_subcommand("tables", "Reproduce the spoofing and defense tables with default settings");
    add_common(tables);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    std::vector<ExperimentConfig> jobs;
    try {
        if (*run) {
            auto c = parse_config(read_file(config_path));
            ov.apply(c);
            jobs.push_back(c);
        } else if (*validate) {
            std::cout << echo_config(parse_config(read_file(validate_path)));
            return 0;
        } else {
            for (auto id : {ScenarioId::Spoof2, ScenarioId::Defense2}) {
                ExperimentConfig c;
                c.scenario = id;
                c.n_seeds = 10;
                if (id == ScenarioId::Defense2) c.auth.gamma_db = 3.0;
                ov.apply(c);
                jobs.push_back(c);
            }
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.code() == Errc::io_error ? 2 : 1;
    }

    try {
        for (const auto& c : jobs) out.write(run_experiment(c, threads), stem_for(c));
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
