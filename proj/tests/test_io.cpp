#include <catch2/catch_amalgamated.hpp>

#include <homplate/studies.hpp>

#include <filesystem>
#include <fstream>

using namespace homplate;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

nlohmann::json base_json() {
    return nlohmann::json::parse(R"({
        "schema_version": 1,
        "phases": [{"lambda": 2.0, "mu": 1.0}],
        "cell_resolution": [2, 2, 2],
        "omega": {"l1": 1.0, "l2": 1.0, "clamped": [true, true, true, true]},
        "plate": {"nx": 4, "ny": 4},
        "load": [0.0, 0.0, 1.0],
        "a": 1,
        "eps_ladder": [0.5, 0.25],
        "h_ladder": [0.01, 0.001],
        "seed": 7
    })");
}

std::string temp_dir(const std::string& tag) {
    const auto d = std::filesystem::temp_directory_path() / ("homplate_io_" + tag);
    std::filesystem::remove_all(d);
    std::filesystem::create_directories(d);
    return d.string();
}

}  // namespace

TEST_CASE("config: parsing, defaults and validation", "[io]") {
    const RunConfig cfg = parse_config(base_json());
    CHECK(cfg.phases.size() == 1);
    CHECK(cfg.phases[0].lambda == 2.0);
    CHECK(cfg.cell_resolution == std::array<int, 3>{2, 2, 2});
    CHECK(cfg.load[2][0] == 1.0);
    CHECK(cfg.load[0][0] == 0.0);
    CHECK(cfg.seed == 7);

    // load polynomials per component
    auto j = base_json();
    j["load"] = {{0.1, 0.2, 0.0, 0.0}, 0.0, 1.0};
    const LoadSpec load = make_load(parse_config(j));
    CHECK(load.f[0](2.0, 3.0) == Catch::Approx(0.1 + 0.2 * 2.0));
    CHECK(load.f[2](2.0, 3.0) == 1.0);

    // validation failures
    j = base_json();
    j["schema_version"] = 2;
    CHECK_THROWS_AS(parse_config(j), ConfigError);

    j = base_json();
    j["phases"][0]["mu"] = 0.0;
    CHECK_THROWS_AS(parse_config(j), ConfigError);

    j = base_json();
    j["eps_ladder"] = nlohmann::json::array();
    CHECK_THROWS_AS(parse_config(j), ConfigError);

    j = base_json();
    j["omega"]["clamped"] = {false, false, false, false};
    CHECK_THROWS_AS(parse_config(j), ConfigError);

    // joint-scaling admissibility h * eps^(a-1) <= 1
    j = base_json();
    j["a"] = 3;
    j["h_ladder"] = {40.0};
    CHECK_THROWS_AS(parse_config(j), ConfigError);
}

TEST_CASE("config: canonical hash", "[io]") {
    const RunConfig a = parse_config(base_json());
    const RunConfig b = parse_config(base_json());
    CHECK(config_hash(a) == config_hash(b));

    auto j = base_json();
    j["seed"] = 8;
    CHECK(config_hash(parse_config(j)) != config_hash(a));

    j = base_json();
    j["phases"][0]["lambda"] = 2.0000001;
    CHECK(config_hash(parse_config(j)) != config_hash(a));

    // the corrector cache key ignores study-only fields
    j = base_json();
    j["seed"] = 99;
    j["h_ladder"] = {0.5};
    CHECK(corrector_cache_key(parse_config(j)) == corrector_cache_key(a));
    j["cell_resolution"] = {4, 4, 4};
    CHECK(corrector_cache_key(parse_config(j)) != corrector_cache_key(a));
}

TEST_CASE("report: format and mixed-hash refusal", "[io]") {
    const std::string dir = temp_dir("report");
    CsvReport rep({"x", "value"}, 0xabcdefull);
    rep.add_row({"0", format_g17(1.0 / 3.0)});
    rep.write(dir + "/r.csv");

    const std::string text = slurp(dir + "/r.csv");
    CHECK(text == "config_hash,x,value\n0000000000abcdef,0,0.33333333333333331\n");
    CHECK(text.find('\r') == std::string::npos);  // LF only

    // appending under the same hash extends the table
    CsvReport more({"x", "value"}, 0xabcdefull);
    more.add_row({"1", "2"});
    more.write(dir + "/r.csv", true);
    CHECK(slurp(dir + "/r.csv").find("0000000000abcdef,1,2\n") != std::string::npos);

    // a different hash is refused
    CsvReport other({"x", "value"}, 0x123ull);
    other.add_row({"2", "3"});
    CHECK_THROWS_AS(other.write(dir + "/r.csv", true), ReportError);

    // wrong row width is refused
    CHECK_THROWS_AS(rep.add_row({"only-one"}), ReportError);
}

TEST_CASE("coefficients file roundtrip and cross-config refusal", "[io]") {
    const std::string dir = temp_dir("coeff");
    const RunConfig cfg = parse_config(base_json());
    const CellRun run = run_cell_pipeline(cfg);
    write_coefficients(dir + "/c.csv", cfg, run.tensor);

    const PlateTensor back = read_coefficients(dir + "/c.csv", cfg);
    CHECK((back.A - run.tensor.A).norm() == 0.0);  // 17 digits round-trip exactly
    CHECK((back.B - run.tensor.B).norm() == 0.0);
    CHECK((back.C - run.tensor.C).norm() == 0.0);
    CHECK(back.min_eigenvalue == run.tensor.min_eigenvalue);

    CHECK_THROWS_AS(read_coefficients(dir + "/missing.csv", cfg), ReportError);
    auto j = base_json();
    j["seed"] = 1000;
    CHECK_THROWS_AS(read_coefficients(dir + "/c.csv", parse_config(j)), ReportError);
}

TEST_CASE("corrector cache: hit, reuse and invalidation", "[io]") {
    const std::string dir = temp_dir("cache");
    const RunConfig cfg = parse_config(base_json());
    const CellRun first = run_cell_pipeline(cfg, dir);
    CHECK_FALSE(first.cache_hit);
    const CellRun second = run_cell_pipeline(cfg, dir);
    CHECK(second.cache_hit);
    CHECK((second.tensor.block() - first.tensor.block()).norm() == 0.0);

    // a tolerance change invalidates the cache
    auto j = base_json();
    j["solver"] = {{"cell_tolerance", 1e-11}};
    const CellRun third = run_cell_pipeline(parse_config(j), dir);
    CHECK_FALSE(third.cache_hit);
}

TEST_CASE("VTK: legacy ASCII layout", "[io]") {
    const std::string dir = temp_dir("vtk");
    const RunConfig cfg = parse_config(base_json());
    const CellRun run = run_cell_pipeline(cfg);

    FineMesh mesh(run.mesh, 0.5, 1.0, 1.0, cfg.clamped);
    write_vtk_fine(dir + "/f.vtk", mesh, Eigen::VectorXd::Zero(3 * mesh.n_nodes()), "u");
    const std::string text = slurp(dir + "/f.vtk");
    CHECK(text.rfind("# vtk DataFile Version 3.0\n", 0) == 0);
    CHECK(text.find("ASCII\nDATASET UNSTRUCTURED_GRID\n") != std::string::npos);
    CHECK(text.find("POINTS " + std::to_string(mesh.n_nodes()) + " double") !=
          std::string::npos);
    CHECK(text.find("CELL_TYPES " + std::to_string(mesh.n_elements())) != std::string::npos);
    CHECK(text.find("VECTORS u double") != std::string::npos);

    PlateMesh pmesh = make_plate_mesh(cfg);
    write_vtk_plate(dir + "/p.vtk", pmesh, Eigen::VectorXd::Zero(pmesh.n_dofs()), "u");
    CHECK(slurp(dir + "/p.vtk").find("CELL_TYPES 16") != std::string::npos);

    write_vtk_cell(dir + "/c.vtk", run.mesh, run.dofs, run.correctors.fields[0], "chi");
    CHECK(slurp(dir + "/c.vtk").find("POINTS 27 double") != std::string::npos);
}

TEST_CASE("verify reports are byte-identical across repeated runs",
          "[io][acceptance12]") {
    const RunConfig cfg = parse_config(base_json());
    StudyOptions o1, o2;
    o1.out_dir = temp_dir("det1");
    o2.out_dir = temp_dir("det2");
    o2.cache_dir = o2.out_dir + "/cache";  // cached rerun must not change bytes

    verify_shd(cfg, o1);
    verify_shd(cfg, o2);
    verify_shd(cfg, o2);
    CHECK(slurp(o1.out_dir + "/verify_shd.csv") == slurp(o2.out_dir + "/verify_shd.csv"));

    verify_commute(cfg, o1);
    verify_commute(cfg, o2);
    CHECK(slurp(o1.out_dir + "/verify_commute.csv") ==
          slurp(o2.out_dir + "/verify_commute.csv"));

    verify_linearize(cfg, o1);
    verify_linearize(cfg, o2);
    CHECK(slurp(o1.out_dir + "/verify_linearize.csv") ==
          slurp(o2.out_dir + "/verify_linearize.csv"));

    cmd_unfold_diag(cfg, o1);
    cmd_unfold_diag(cfg, o2);
    CHECK(slurp(o1.out_dir + "/unfold_diagnostics.csv") ==
          slurp(o2.out_dir + "/unfold_diagnostics.csv"));
}
