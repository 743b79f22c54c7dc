#include "varexp/commands.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace varexp;

namespace {

const char* const minimal_text = R"(# reference problem
[problem]
p = 3
q = 2
r = 4
xi = 0
nonlinearity = f1
lambda = 0.05

[mesh]
dimension = 1
resolution = 200
)";

std::string error_of(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& err) {
        return err.what();
    }
    return {};
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::filesystem::path scratch(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("varexp-test-" + name);
    std::filesystem::remove_all(dir);
    return dir;
}

}  // namespace

TEST(Config, MinimalReferenceConfig) {
    const RunConfig c = parse_config(minimal_text);
    EXPECT_EQ(c.p, FieldExpr::constant(3.0));
    EXPECT_EQ(c.lambda, 0.05);
    EXPECT_EQ(c.resolution, 200);
    EXPECT_EQ(c.nonlinearity, NonlinearityKind::f1);
    EXPECT_EQ(c.tolerance, 1e-8);
    EXPECT_EQ(c.multistarts, 20);
}

TEST(Config, ExponentChainViolationIsReported) {
    std::string text = minimal_text;
    text.replace(text.find("q = 2"), 5, "q = 3.5");
    const std::string err = error_of(text);
    EXPECT_NE(err.find("q_+ < p_-"), std::string::npos) << err;
}

TEST(Config, AffineExponentIsSampled) {
    std::string text = minimal_text;
    text.replace(text.find("p = 3"), 5, "p = 2.5 + 0.4*z");
    const RunConfig c = parse_config(text);
    const auto spec = make_spec(c, 0.05);
    EXPECT_DOUBLE_EQ(spec.exponents.p.nodes[0], 2.5);
    EXPECT_DOUBLE_EQ(spec.exponents.p.nodes[200], 2.9);
}

TEST(Config, Errors) {
    EXPECT_NE(error_of(std::string(minimal_text) + "tolerence = 1e-8\n").find("unknown key"), std::string::npos);
    EXPECT_NE(error_of(std::string(minimal_text) + "[plot]\nx = 1\n").find("unknown section"), std::string::npos);
    EXPECT_NE(error_of("[problem]\np = 3\nq = 2\n").find("missing required key problem.r"), std::string::npos);
    EXPECT_NE(error_of("[problem]\np = 3\nq = 2\nr = four\n").find("r"), std::string::npos);
    EXPECT_NE(error_of("lambda = 1\n[problem]\np = 3\nq = 2\nr = 4\n").find("outside"), std::string::npos);
    EXPECT_NE(error_of(std::string(minimal_text) + "[solver]\nmax_iterations = 2.5\n").find("integer"), std::string::npos);
    EXPECT_NE(error_of(std::string(minimal_text) + "[sweep]\nlambdas = 1, 0.5\n").find("increasing"), std::string::npos);
    EXPECT_NE(error_of(std::string(minimal_text) + "theta = -1\n").find("theta"), std::string::npos);
    EXPECT_FALSE(error_of("[problem]\np = 3\nq = 2\nr = 4\nnonlinearity = f2\n").empty());
}

TEST(Config, RoundTrip) {
    std::vector<std::string> texts = {
        minimal_text,
        "[problem]\np = 2.5 + 0.4*z\nq = 1.5 - 0.1*x\nr = 4\nxi = -0.25 + 0.5*z\ntheta = 2\ngrowth_cap = 3\n"
        "[mesh]\ndimension = 2\nresolution = 6\n[solver]\nseed = 42\ntolerance = 1e-9\n"
        "[sweep]\nlambdas = 0.1, 0.5, 2\nlambda_star = false\n[output]\ndirectory = results/a\ntrace = true\n",
        "[problem]\np = 3\nq = 2\nr = 4\nm = 3\nnonlinearity = f2\ncoefficient = 0.5\n",
        "[problem]\np = 3\nq = 2\nr = 4\nnonlinearity = tabulated\ntable = 0.5:0.1, 1:1, 100:1e6\n",
        "[problem]\np = 3\nq = 2\nr = 4\nxi = table(0, 0.5, -0.25, 0.1, 0)\n[mesh]\nresolution = 4\n",
    };
    for (const auto& t : texts) {
        const RunConfig c = parse_config(t);
        EXPECT_EQ(parse_config(render_config(c)), c) << render_config(c);
    }
}

TEST(Commands, SolveBeyondThresholdIsAValidAnswer) {
    std::string text = minimal_text;
    text.replace(text.find("lambda = 0.05"), 13, "lambda = 2000");
    text.replace(text.find("resolution = 200"), 16, "resolution = 60");
    const auto dir = scratch("solve");
    CommandContext ctx;
    ctx.out = dir;
    std::ostringstream log;
    ctx.log = &log;
    EXPECT_EQ(cmd_solve(parse_config(text), ctx), 0);
    const std::string record = slurp(dir / "record.json");
    EXPECT_NE(record.find("\"status\": \"none\""), std::string::npos);
    EXPECT_NE(record.find("\"schema_version\": 1"), std::string::npos);
    EXPECT_TRUE(std::filesystem::exists(dir / "auxiliary.csv"));
}

TEST(Commands, SweepIsDeterministicAndMonotone) {
    const std::string text = "[problem]\np = 3\nq = 2\nr = 4\n[mesh]\nresolution = 50\n[solver]\nmultistarts = 3\nseed = 7\n"
                             "[sweep]\nlambdas = 50, 150, 250, 400\nlambda_tolerance = 0.5\n";
    const RunConfig c = parse_config(text);
    std::ostringstream log;
    CommandContext a, b;
    a.out = scratch("sweep-a");
    b.out = scratch("sweep-b");
    a.threads = 1;
    b.threads = 4;
    a.log = b.log = &log;
    ASSERT_EQ(cmd_sweep(c, a), 0);
    ASSERT_EQ(cmd_sweep(c, b), 0);
    EXPECT_EQ(slurp(*a.out / "diagram.json"), slurp(*b.out / "diagram.json"));

    std::istringstream csv(slurp(*a.out / "summary.csv"));
    std::string line;
    std::getline(csv, line);
    EXPECT_EQ(line, "lambda,status,count,minimal_norm,minimal_sup,energy_low,energy_high,auxiliary_sup");
    std::vector<std::string> statuses;
    std::string footer;
    while (std::getline(csv, line)) {
        if (line.rfind("#", 0) == 0) {
            footer = line;
            continue;
        }
        statuses.push_back(line.substr(line.find(',') + 1, line.find(',', line.find(',') + 1) - line.find(',') - 1));
    }
    EXPECT_EQ(statuses, (std::vector<std::string>{"two-or-more", "two-or-more", "none", "none"}));
    EXPECT_NE(footer.find("lambda_star_estimate="), std::string::npos);
}

TEST(Commands, OracleNeedsConstantExponents) {
    std::string text = minimal_text;
    text.replace(text.find("p = 3"), 5, "p = 2.5 + 0.4*z");
    CommandContext ctx;
    ctx.out = scratch("oracle");
    EXPECT_THROW(cmd_oracle(parse_config(text), ctx), ConfigError);
}
