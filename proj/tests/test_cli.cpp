#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "mqm/scenario.hpp"

using namespace mqm;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
    const fs::path p = fs::temp_directory_path() / ("mqm_test_" + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

json small_halfline_config(const fs::path& out) {
    return json{{"scenario", "halfline"},
                {"seed", 11},
                {"out", out.string()},
                {"params", {{"hbar", 1.0}, {"mass", 1.0}, {"lambda", 1.0}}},
                {"packet", {{"x0", 2.0}, {"sigma_x", 0.5}}},
                {"grid", {{"x_min", 0.0}, {"x_max", 9.0}, {"n_points", 901}}},
                {"time", {{"dt", 2e-4}, {"n_steps", 1500}, {"snapshot_stride", 750}}}};
}

json small_diffusion_config(const fs::path& out) {
    return json{{"scenario", "diffusion-compare"},
                {"seed", 5},
                {"threads", 2},
                {"out", out.string()},
                {"diffusion",
                 {{"x0", 1.0},
                  {"diffusion_coeff", 0.5},
                  {"wall", 0.0},
                  {"horizon", 4.0},
                  {"dt", 1e-3},
                  {"n_paths", 4000},
                  {"bin_width", 0.1},
                  {"fp", {{"x_max", 14.0}, {"n_points", 701}}}}}};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in), {});
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

int run_cli(const std::string& args) {
    const std::string cmd = std::string(MQM_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("halfline run writes the documented files and cross-checks") {
    const auto out = fresh_dir("halfline");
    auto cfg = ScenarioConfig::from_json(small_halfline_config(out));
    run_scenario(cfg);

    for (const char* f :
         {"survival.csv", "arrival.csv", "snapshots.json", "summary.json", "manifest.json"})
        REQUIRE(fs::exists(out / f));

    // survival.csv schema
    std::ifstream surv(out / "survival.csv");
    std::string header;
    std::getline(surv, header);
    REQUIRE(header == "t,grad_sq,survival,current");

    const json summary = read_json(out / "summary.json");
    REQUIRE(summary["survival_abs_diff"].get<double>() <= 1e-4);
    REQUIRE(summary["bookkeeping_residual"].get<double>() <= 1e-10);
    REQUIRE(summary["norm_max_drift"].get<double>() <= 1e-12);
    REQUIRE(summary["linf_error_vs_images"].get<double>() <= 1e-3);

    // the manifest lists exactly the produced files, no orphans
    const json manifest = read_json(out / "manifest.json");
    std::set<std::string> listed;
    for (const auto& e : manifest["outputs"]) listed.insert(e["path"].get<std::string>());
    std::set<std::string> present;
    for (const auto& e : fs::directory_iterator(out)) {
        const auto name = e.path().filename().string();
        if (name != "manifest.json") present.insert(name);
    }
    REQUIRE(listed == present);
    REQUIRE(manifest["config"]["scenario"] == "halfline");
}

TEST_CASE("identical config and seed reproduce byte-identical outputs") {
    const auto out_a = fresh_dir("repro_a");
    const auto out_b = fresh_dir("repro_b");

    for (const auto& make_cfg :
         {std::function<json(const fs::path&)>(small_halfline_config),
          std::function<json(const fs::path&)>(small_diffusion_config)}) {
        auto cfg_a = ScenarioConfig::from_json(make_cfg(out_a));
        auto cfg_b = ScenarioConfig::from_json(make_cfg(out_b));
        run_scenario(cfg_a);
        run_scenario(cfg_b);
        const json manifest = read_json(out_a / "manifest.json");
        for (const auto& e : manifest["outputs"]) {
            const std::string rel = e["path"].get<std::string>();
            REQUIRE(slurp(out_a / rel) == slurp(out_b / rel));
        }
        fs::remove_all(out_a);
        fs::remove_all(out_b);
    }
}

TEST_CASE("different seeds change the sampled outputs") {
    const auto out_a = fresh_dir("seed_a");
    const auto out_b = fresh_dir("seed_b");
    auto ja = small_diffusion_config(out_a);
    auto jb = small_diffusion_config(out_b);
    jb["seed"] = 6;
    run_scenario(ScenarioConfig::from_json(ja));
    run_scenario(ScenarioConfig::from_json(jb));
    REQUIRE(slurp(out_a / "fpt_histogram.csv") != slurp(out_b / "fpt_histogram.csv"));
}

TEST_CASE("diffusion-compare summary carries the agreement statistics") {
    const auto out = fresh_dir("diffcmp");
    run_scenario(ScenarioConfig::from_json(small_diffusion_config(out)));
    const json summary = read_json(out / "summary.json");
    // 4000 paths: expect KS well under this sanity ceiling
    REQUIRE(summary["ks_mc_vs_closed_form"].get<double>() <= 0.05);
    REQUIRE(summary["ks_mc_vs_fokker_planck"].get<double>() <= 0.05);
    REQUIRE(summary["fp_bookkeeping_max_residual"].get<double>() <= 1e-8);
    REQUIRE(summary["pr_tau_le_1"].get<double>() ==
            Catch::Approx(0.3173105078629141).margin(0.03));
    REQUIRE(fs::exists(out / "fp_current.csv"));
    REQUIRE(fs::exists(out / "fpt_histogram.csv"));
}

TEST_CASE("gaussian-slit run emits the ratio diagnostics") {
    const auto out = fresh_dir("slit");
    const json j{{"scenario", "gaussian-slit"},
                 {"out", out.string()},
                 {"params", {{"lambda", 0.7}}},
                 {"packet", {{"x0", 2.0}, {"sigma_x", 1.0}, {"sigma_y", 1.0}}},
                 {"slit", {{"y_max", 5.0}, {"n_y", 81}, {"t_max", 3.0}, {"n_t", 6}, {"n_series", 601}}}};
    run_scenario(ScenarioConfig::from_json(j));
    const json summary = read_json(out / "summary.json");
    REQUIRE(summary["ratio_max_relative_variation_across_y"].get<double>() <= 1e-9);
    REQUIRE(summary["brightness_max_relative_deviation"].get<double>() <= 1e-12);
    const double s_final = summary["final_survival"].get<double>();
    REQUIRE(s_final > 0.0);
    REQUIRE(s_final < 1.0);
    // absorbed mass bookkeeping between the record and the point density
    REQUIRE(summary["arrival_point_mass"].get<double>() ==
            Catch::Approx(1.0 - s_final).margin(1e-4));
}

TEST_CASE("lateral-walls run produces the wall and screen patterns") {
    const auto out = fresh_dir("lateral");
    const json j{{"scenario", "lateral-walls"},
                 {"out", out.string()},
                 {"packet", {{"x0", 2.0}, {"sigma_x", 0.5}}},
                 {"slit", {{"y0", 2.0}}},
                 {"lateral",
                  {{"n_series", 64},
                   {"t_max", 2.0},
                   {"n_t", 201},
                   {"n_x", 41},
                   {"n_y", 41},
                   {"k_max", 3.0},
                   {"n_k", 61}}}};
    run_scenario(ScenarioConfig::from_json(j));
    for (const char* f : {"velocity_density.csv", "wall_pattern.csv", "screen_pattern.csv"})
        REQUIRE(fs::exists(out / f));
    // screen pattern vanishes at the walls where the series does
    std::ifstream in(out / "screen_pattern.csv");
    std::string line;
    std::getline(in, line);  // header
    std::getline(in, line);  // first row: y = -y0
    REQUIRE(line.substr(line.find(',') + 1) == "0");
}

TEST_CASE("reconstruction run meets its round-trip diagnostics") {
    const auto out = fresh_dir("recon");
    const json j{{"scenario", "reconstruction"},
                 {"out", out.string()},
                 {"packet", {{"x0", 2.0}, {"sigma_x", 0.5}, {"sigma_y", 1.0}}},
                 {"reconstruction",
                  {{"t_eval", 1.0}, {"n_x", 41}, {"n_y", 41}}}};
    run_scenario(ScenarioConfig::from_json(j));
    const json summary = read_json(out / "summary.json");
    REQUIRE(summary["linf_relative_error_vs_free_density"].get<double>() <= 1e-6);
    REQUIRE(summary["grid_integral"].get<double>() == Catch::Approx(1.0).margin(1e-8));
    REQUIRE(summary["masked_fraction"].get<double>() <= 0.05);
}

TEST_CASE("validation reports field-level problems") {
    json j = small_halfline_config("unused");
    j["packet"].erase("sigma_x");
    auto cfg = ScenarioConfig::from_json(j);
    const auto errors = validate_config(cfg);
    REQUIRE_FALSE(errors.empty());
    bool mentions_field = false;
    for (const auto& e : errors) mentions_field |= e.find("packet.sigma_x") != std::string::npos;
    REQUIRE(mentions_field);
}

TEST_CASE("a cramped domain is rejected up front") {
    json j = small_halfline_config("unused");
    j["grid"]["x_max"] = 4.0;  // closer than the packet reach
    const auto errors = validate_config(ScenarioConfig::from_json(j));
    REQUIRE_FALSE(errors.empty());
    REQUIRE(errors.front().find("x_max") != std::string::npos);
}

TEST_CASE("unknown scenario names list the valid ones") {
    json j{{"scenario", "warp-drive"}};
    const auto errors = validate_config(ScenarioConfig::from_json(j));
    REQUIRE(errors.size() == 1);
    for (const auto& name : valid_scenarios())
        REQUIRE(errors.front().find(name) != std::string::npos);
}

TEST_CASE("cli exit codes") {
    const auto dir = fresh_dir("cli");

    // usage error: unknown scenario -> 2
    {
        std::ofstream cfg(dir / "bad.json");
        cfg << R"({"scenario":"warp-drive"})";
    }
    REQUIRE(run_cli("run " + (dir / "bad.json").string()) == 2);
    REQUIRE(run_cli("validate " + (dir / "bad.json").string()) == 2);

    // missing config file -> 2
    REQUIRE(run_cli("run " + (dir / "absent.json").string()) == 2);

    // numerical guard: a wall-bound packet satisfies the static sizing rule,
    // reflects off the detector, and then reaches the far edge -> 1
    {
        json j = small_halfline_config(dir / "guard_out");
        j["packet"] = {{"x0", 2.0}, {"sigma_x", 0.5}, {"k0", -8.0}};
        j["grid"] = {{"x_min", 0.0}, {"x_max", 6.5}, {"n_points", 651}};
        j["time"] = {{"dt", 5e-4}, {"n_steps", 3000}};
        std::ofstream cfg(dir / "guard.json");
        cfg << j.dump();
    }
    REQUIRE(run_cli("run " + (dir / "guard.json").string()) == 1);

    // clean run -> 0, and list-scenarios -> 0
    {
        std::ofstream cfg(dir / "ok.json");
        json j = small_halfline_config(dir / "ok_out");
        j["time"] = {{"dt", 5e-4}, {"n_steps", 200}};
        cfg << j.dump();
    }
    REQUIRE(run_cli("run " + (dir / "ok.json").string()) == 0);
    REQUIRE(run_cli("list-scenarios") == 0);
    REQUIRE(run_cli("definitely-not-a-command") == 2);
}
