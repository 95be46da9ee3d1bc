#include <doctest.h>

#include <sstream>

#include <json.hpp>

#include "isgd/cli.hpp"
#include "scratch.hpp"

using isgd::cli::run;

namespace {
struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}
}  // namespace

TEST_CASE("simulate, fit, predict round trip") {
  ScratchDir dir("cli");
  const auto data = dir.file("sim.csv");
  auto r = invoke({"simulate", "--generator", "lasso", "--n", "400", "--p", "5", "--seed", "3",
                   "--out", data});
  REQUIRE(r.code == 0);
  const auto sidecar = nlohmann::json::parse(slurp(data + ".json"));
  CHECK(sidecar["theta_star"].size() == 5);

  const auto model = dir.file("fit.json");
  const auto trace = dir.file("trace.csv");
  r = invoke({"fit", "--data", data, "--method", "ai-sgd", "--passes", "3", "--shuffle",
              "--seed", "1", "--out", model, "--trace", trace, "--trace-every", "100",
              "--truth", data + ".json", "--chunk-size", "64"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("x5") != std::string::npos);
  const auto fitted = nlohmann::json::parse(slurp(model));
  CHECK(fitted["estimate"].size() == 5);
  CHECK(fitted["updates"] == 1200);
  CHECK(fitted["method"] == "ai-sgd");
  CHECK(fitted["learning_rate"]["c"].get<double>() == doctest::Approx(2.0 / 3));
  const auto trace_text = slurp(trace);
  CHECK(trace_text.rfind("update_index,metric,value\n100,mse,", 0) == 0);

  const auto preds = dir.file("pred.csv");
  r = invoke({"predict", "--data", data, "--model-file", model, "--out", preds});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("mean squared prediction error") != std::string::npos);
  const auto pred_text = slurp(preds);
  CHECK(pred_text.rfind("prediction\n", 0) == 0);
  CHECK(std::count(pred_text.begin(), pred_text.end(), '\n') == 401);
}

TEST_CASE("binomial predict reports classification error") {
  ScratchDir dir("clibin");
  const auto data = dir.write("b.csv", "x1,x2,y\n1,0,1\n-1,0.5,0\n2,1,1\n-2,-1,0\n");
  const auto model = dir.file("m.json");
  REQUIRE(invoke({"fit", "--data", data, "--model", "binomial", "--passes", "20", "--out", model})
              .code == 0);
  const auto r = invoke({"predict", "--data", data, "--model-file", model});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("classification error: 0") != std::string::npos);
}

TEST_CASE("path command writes one entry per lambda") {
  ScratchDir dir("clipath");
  const auto data = dir.file("sim.csv");
  REQUIRE(invoke({"simulate", "--n", "300", "--p", "8", "--out", data}).code == 0);
  const auto out = dir.file("path.json");
  const auto r = invoke({"path", "--data", data, "--n-lambda", "6", "--passes", "2", "--out", out});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(slurp(out));
  CHECK(j["lambda_grid"].size() == 6);
  CHECK(j["entries"].size() == 6);
  CHECK(j["alpha"] == 1.0);
  CHECK(r.out.find("lambda") != std::string::npos);

  const auto cold = invoke({"path", "--data", data, "--n-lambda", "3", "--no-warm-start",
                            "--parallel", "2", "--method", "esgd", "--gamma0", "50", "--lr-a",
                            "0.01"});
  CHECK(cold.code == 0);
  CHECK(cold.out.find("divergence") != std::string::npos);
}

TEST_CASE("exit codes") {
  ScratchDir dir("clierr");
  const auto data = dir.file("sim.csv");
  REQUIRE(invoke({"simulate", "--n", "500", "--p", "10", "--out", data}).code == 0);

  CHECK(invoke({}).code == 2);
  CHECK(invoke({"fit"}).code == 2);
  CHECK(invoke({"fit", "--data", data, "--method", "adam"}).code == 2);
  CHECK(invoke({"fit", "--data", data, "--lr", "adam"}).code == 2);
  CHECK(invoke({"fit", "--data", data, "--alpha", "2"}).code == 2);
  CHECK(invoke({"fit", "--data", data, "--passes", "0"}).code == 2);
  CHECK(invoke({"fit", "--data", data, "--bogus"}).code == 2);
  CHECK(invoke({"simulate", "--generator", "nope", "--out", dir.file("z.csv")}).code == 2);

  CHECK(invoke({"fit", "--data", dir.file("missing.csv")}).code == 3);
  CHECK(invoke({"fit", "--data", data, "--response", "nope"}).code == 3);
  const auto bad = dir.write("bad.csv", "a,y\n1,2\n1,x\n");
  const auto parse = invoke({"fit", "--data", bad});
  CHECK(parse.code == 3);
  CHECK(parse.err.find("line 3") != std::string::npos);
  CHECK(invoke({"fit", "--data", data, "--model", "binomial"}).code == 3);

  const auto div = invoke({"fit", "--data", data, "--method", "esgd", "--gamma0", "50",
                           "--lr-a", "0.01"});
  CHECK(div.code == 4);
  CHECK(div.err.find("diverged") != std::string::npos);
  CHECK(invoke({"fit", "--data", data, "--method", "isgd", "--gamma0", "50", "--lr-a", "0.01"})
            .code == 0);

  CHECK(invoke({"fit", "--help"}).code == 0);
}

TEST_CASE("headerless and tab-delimited input") {
  ScratchDir dir("clitab");
  const auto data = dir.write("d.tsv", "1\t2\t3.5\n2\t1\t3\n0\t1\t1\n");
  const auto r = invoke({"fit", "--data", data, "--no-header", "--delimiter", "tab"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("V1") != std::string::npos);
  CHECK(r.out.find("V3") == std::string::npos);

  const auto by_index = invoke({"fit", "--data", data, "--no-header", "--delimiter", "tab",
                                "--response", "0"});
  REQUIRE(by_index.code == 0);
  CHECK(by_index.out.find("V1") == std::string::npos);
}

TEST_CASE("repeated commands give identical files") {
  ScratchDir dir("clidet");
  const auto a = dir.file("a.csv"), b = dir.file("b.csv");
  REQUIRE(invoke({"simulate", "--generator", "huber", "--n", "200", "--p", "4", "--seed", "9",
                  "--out", a})
              .code == 0);
  REQUIRE(invoke({"simulate", "--generator", "huber", "--n", "200", "--p", "4", "--seed", "9",
                  "--out", b})
              .code == 0);
  CHECK(slurp(a) == slurp(b));
  CHECK(slurp(a + ".json") == slurp(b + ".json"));

  const auto f1 = dir.file("f1.json"), f2 = dir.file("f2.json");
  for (const auto& out : {f1, f2}) {
    REQUIRE(invoke({"fit", "--data", a, "--model", "huber", "--shuffle", "--seed", "5",
                    "--passes", "2", "--chunk-size", "33", "--out", out})
                .code == 0);
  }
  CHECK(slurp(f1) == slurp(f2));
}
