#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "hrode/experiments.hpp"

using namespace hrode;

namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("minimal config gets defaults") {
  const ExperimentConfig config = parse_config(R"({"experiment":"verify"})");
  CHECK(config.experiment == "verify");
  CHECK(config.monte_carlo == 1);
  CHECK(config.seed == 0);
}

TEST_CASE("config validation failures name the offending key") {
  CHECK_THROWS_AS(parse_config("not json"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"seed":1})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"experiment":"bogus"})"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config(R"({"experiment":"verify","typo_key":1})"),
                       doctest::Contains("typo_key"), ConfigError);
  CHECK_THROWS_WITH_AS(
      parse_config(R"({"experiment":"classify","methods":[{"name":"adamw"}]})"),
      doctest::Contains("unknown method"), ConfigError);
  CHECK_THROWS_AS(
      parse_config(R"({"experiment":"classify","methods":[{"name":"nnag","beta":"L/"}]})"),
      ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"experiment":"classify","monte_carlo":0})"), ConfigError);
}

TEST_CASE("method parameter expressions resolve against L") {
  const ExperimentConfig config = parse_config(
      R"({"experiment":"classify","monte_carlo":100,
          "methods":[{"name":"nnag","c":"auto","beta":"L/10"}]})");
  REQUIRE(config.methods.size() == 1);
  const MethodSpec spec = make_method_spec(config.methods[0], 25.0, 1.0);
  CHECK(spec.c == doctest::Approx(0.2));      // 1/sqrt(25)
  CHECK(spec.beta == doctest::Approx(2.5));   // 25/10
  CHECK(spec.alpha == doctest::Approx(0.75));
  CHECK(spec.oracle == OracleMode::GaussianNoise);

  const MethodSpec sgd = make_method_spec({"sgd", json::object()}, 4.0, 1.0);
  CHECK(sgd.method == Method::Gd);
  CHECK(sgd.s == doctest::Approx(0.25));
  CHECK(sgd.oracle == OracleMode::Minibatch);

  const MethodSpec svrg = make_method_spec({"svrg", json::object()}, 4.0, 1.0);
  CHECK(svrg.s == doctest::Approx(0.025));  // 1/(10 L)

  const MethodSpec mix = make_method_spec({"nnag_sgd", json::object()}, 4.0, 1.0);
  CHECK(mix.beta == doctest::Approx(4.0));  // beta = L
  const MethodSpec mix2 = make_method_spec({"nnag_svrg", json::object()}, 4.0, 1.0);
  CHECK(mix2.beta == doctest::Approx(0.4));
  CHECK(mix2.reset_schedule_on_snapshot);
}

TEST_CASE("summarize bands") {
  const std::vector<int> idx{0};
  const auto single = summarize({{3.0}}, idx);
  CHECK(single[0].lo68 == single[0].mean);
  CHECK(single[0].hi68 == single[0].mean);

  const auto two = summarize({{0.0}, {2.0}}, idx);
  CHECK(two[0].mean == doctest::Approx(1.0));
  CHECK(two[0].lo68 == doctest::Approx(1.0 - std::sqrt(2.0)));
  CHECK(two[0].hi68 == doctest::Approx(1.0 + std::sqrt(2.0)));

  const auto identical = summarize({{5.0, 1.0}, {5.0, 1.0}}, {0, 1});
  CHECK(identical[1].hi68 - identical[1].lo68 == 0.0);

  CHECK_THROWS_AS(summarize({{1.0}, {1.0, 2.0}}, idx), std::invalid_argument);
  CHECK_THROWS_AS(summarize({{1.0, 2.0}}, idx), std::invalid_argument);
}

TEST_CASE("seventeen-digit csv format") {
  CHECK(format_g17(0.1) == "0.10000000000000001");
  CHECK(format_g17(1.0) == "1");
  CHECK(format_g17(std::nan("")) == "nan");
}

TEST_CASE("classify experiment writes per-method summaries and reruns byte-identically") {
  const std::string text = R"({"experiment":"classify","samples":24,"dimension":3,
      "epochs":4,"monte_carlo":2,"seed":5,
      "methods":[{"name":"nnag"},{"name":"sgd"},{"name":"nnag_svrg"}]})";
  const ExperimentConfig config = parse_config(text);

  TempDir dir_a("hrode_classify_a"), dir_b("hrode_classify_b");
  const ExperimentResult first = run_experiment(config, dir_a.path);
  const ExperimentResult second = run_experiment(config, dir_b.path);
  CHECK(first.exit_code == 0);

  for (const char* name :
       {"classify_loss_nnag.csv", "classify_loss_sgd.csv", "classify_loss_nnag_svrg.csv",
        "classify_gradnorm2_nnag.csv", "classify_dataset.csv", "run_manifest.json"}) {
    CAPTURE(name);
    CHECK(slurp(dir_a.path / name) == slurp(dir_b.path / name));
  }

  const std::string loss = slurp(dir_a.path / "classify_loss_nnag.csv");
  CHECK(loss.rfind("epoch,mean,lo68,hi68\n0,", 0) == 0);
  CHECK(std::count(loss.begin(), loss.end(), '\n') == 6);  // header + epochs 0..4
  CHECK(loss.find('\r') == std::string::npos);

  CHECK(first.manifest.at("version").get<std::string>() ==
        std::string(version_string()));
  CHECK(first.manifest.at("config").at("seed").get<int>() == 5);
}

TEST_CASE("odecmp experiment emits strictly decreasing gaps") {
  const ExperimentConfig config =
      parse_config(R"({"experiment":"odecmp","s_values":[1e-2,1e-3],"dt":2e-3,"t_end":3.0})");
  TempDir dir("hrode_odecmp");
  const ExperimentResult result = run_experiment(config, dir.path);
  CHECK(result.exit_code == 0);
  CHECK(result.manifest.at("diagnostics").at("strictly_decreasing").get<bool>());
  const std::string csv = slurp(dir.path / "odecmp_gaps.csv");
  CHECK(csv.rfind("s,gap\n", 0) == 0);
}

TEST_CASE("bounds experiment emits curves and the overlay round-trips") {
  TempDir dir("hrode_bounds");
  const fs::path overlay = dir.path / "external.csv";
  {
    std::ofstream out(overlay, std::ios::binary);
    out << "k,value\n1,3.5\n10,0.35\n";
  }
  std::ostringstream text;
  text << R"({"experiment":"bounds","lipschitz_values":[50],"k_max":2000,"points":25,)"
       << R"("eps_k0":0.5,"overlay":")" << overlay.generic_string() << "\"}";
  const ExperimentConfig config = parse_config(text.str());
  const ExperimentResult result = run_experiment(config, dir.path);
  CHECK(result.exit_code == 0);

  const std::string nnag = slurp(dir.path / "bounds_nnag_alpha34_L50.csv");
  CHECK(nnag.rfind("k,value\n", 0) == 0);
  CHECK(slurp(dir.path / "bounds_overlay.csv") == "k,value\n1,3.5\n10,0.35\n");
  CHECK(result.manifest.at("diagnostics").at("lipschitz").contains("50"));
}

TEST_CASE("eps(k0) estimation is deterministic in the seed") {
  const double a = estimate_eps_k0(100.0, 0.1, 10.0, 1.0, 1.0, 8, 20, 3, 1);
  const double b = estimate_eps_k0(100.0, 0.1, 10.0, 1.0, 1.0, 8, 20, 3, 1);
  CHECK(a == b);
  CHECK(a > 0.0);
}

TEST_CASE("classify with a noiseless semi-implicit run obeys the objective bound") {
  const ExperimentConfig config = parse_config(
      R"({"experiment":"classify","samples":30,"dimension":3,"epochs":40,
          "monte_carlo":1,"seed":2,"methods":[{"name":"nag_sie","sigma2":0}]})");
  const ClassifyResult result = run_classify(config);
  REQUIRE(result.methods.size() == 1);
  const auto& loss = result.methods[0].loss;
  REQUIRE(loss.size() == 41);

  // the logistic task has no finite minimizer, so compare against a long-run
  // reference point: the gap bound 2 |x0 - z|^2 / (s k (k+2)) holds for any
  // fixed comparison point z
  const Objective obj = make_logistic(result.data);
  const double s = 1.0 / obj.lipschitz;
  MethodSpec spec;
  spec.method = Method::NagSie;
  spec.name = "nag_sie";
  spec.s = s;
  RunOptions long_run;
  long_run.iterations = 4000;
  long_run.log_every = 4000;
  const Vector z = run_optimizer(spec, obj, Vector::Zero(3), long_run).final_state.x;
  const double f_ref = obj.value(z);
  const double R2 = z.squaredNorm();  // x0 = 0
  for (std::size_t row = 1; row < loss.size(); ++row) {
    const double k = static_cast<double>(row);
    CHECK(loss[row].mean - f_ref <= 2.0 * R2 / (s * k * (k + 2.0)) * (1.0 + 1e-9));
  }
}
