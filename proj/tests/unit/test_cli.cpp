#include "rcm_admittance/telemetry.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <csignal>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

namespace rcm {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  int code = -1;
  std::string output;
};

Outcome rcmsim(const std::string& args) {
  const fs::path log = fs::temp_directory_path() / ("rcmsim_" + std::to_string(::getpid()) + ".log");
  const std::string cmd = std::string(RCMSIM_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  Outcome o;
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  o.output = ss.str();
  return o;
}

std::string scen(const std::string& name) { return test::source_path("scenarios/" + name); }

std::string cfg_args(const std::string& overlay = {}) {
  std::string a = "--config " + scen("default.yaml");
  if (!overlay.empty()) a += " --scenario " + overlay;
  return a;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("rcm_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string write_file(const fs::path& path, const std::string& text) {
  std::ofstream(path) << text;
  return path.string();
}

TEST(Cli, CheckDefaultPasses) {
  const auto o = rcmsim("check " + cfg_args());
  EXPECT_EQ(o.code, 0) << o.output;
  EXPECT_NE(o.output.find("alignment"), std::string::npos);
}

TEST(Cli, NegativeAlphaIsInputError) {
  const auto dir = scratch("alpha");
  const auto bad = write_file(dir / "bad.yaml", "controller:\n  alpha: -1\n");
  const auto o = rcmsim("check " + cfg_args(bad));
  EXPECT_EQ(o.code, 2);
  EXPECT_NE(o.output.find("controller.alpha"), std::string::npos) << o.output;
  EXPECT_NE(o.output.find("bad.yaml:2"), std::string::npos) << o.output;
}

TEST(Cli, MisalignedStartIsInputError) {
  const auto dir = scratch("misaligned");
  // 5 mm along a_t from the exact port.
  const auto bad = write_file(dir / "port.yaml",
                              "port:\n  p_c: [-0.6100180829871671, -0.2220284245658467, 0.0]\n");
  const auto o = rcmsim("run " + cfg_args(bad) + " --out " + (dir / "out").string());
  EXPECT_EQ(o.code, 2) << o.output;
  EXPECT_NE(o.output.find("misses the port"), std::string::npos) << o.output;
}

TEST(Cli, BarrierContactAtStartIsInputError) {
  const auto dir = scratch("contact");
  const auto bad = write_file(dir / "tube.yaml",
                              "region:\n  tubes:\n    - center: [-0.6053196198834375, -0.2203183238549033, -0.14]\n"
                              "      axis: [0, 1, 0]\n");
  const auto o = rcmsim("check " + cfg_args(bad));
  EXPECT_EQ(o.code, 2) << o.output;
  EXPECT_NE(o.output.find("forbidden region"), std::string::npos) << o.output;
}

TEST(Cli, UnknownOptionIsInputError) {
  EXPECT_EQ(rcmsim("run --bogus").code, 2);
  EXPECT_EQ(rcmsim("check").code, 2);
}

TEST(Cli, RunWritesArtifactsAndReplays) {
  const auto dir = scratch("run");
  const auto out = dir / "out";
  const auto o = rcmsim("run " + cfg_args(scen("tip_press.yaml")) + " --out " + out.string());
  ASSERT_EQ(o.code, 0) << o.output;
  for (const char* f : {"trace.tsv", "report.json", "rcm_error.tsv", "clearance.tsv", "human_wrench.tsv",
                        "port_repulsion.tsv", "damping.tsv"}) {
    EXPECT_TRUE(fs::exists(out / f)) << f;
  }
  std::ifstream rj(out / "report.json");
  const auto report = Json::parse(rj);
  EXPECT_TRUE(report["pass"].get<bool>());
  EXPECT_EQ(report["ticks"].get<int>(), 4500);

  const auto replay = rcmsim("replay " + (out / "trace.tsv").string());
  EXPECT_EQ(replay.code, 0) << replay.output;
  EXPECT_EQ(rcmsim("replay --rcm-tol 1e-9 " + (out / "trace.tsv").string()).code, 4);

  std::ifstream in(out / "trace.tsv");
  std::stringstream ss;
  ss << in.rdbuf();
  std::string text = ss.str();
  text.erase(text.rfind("# end"));
  const auto cut = write_file(dir / "cut.tsv", text);
  const auto bad = rcmsim("replay " + cut);
  EXPECT_EQ(bad.code, 2);
  EXPECT_NE(bad.output.find("truncated"), std::string::npos) << bad.output;
  EXPECT_EQ(rcmsim("replay " + (dir / "missing.tsv").string()).code, 2);
}

TEST(Cli, StrictToleranceFailsMonitor) {
  const auto dir = scratch("strict");
  const auto o = rcmsim("run " + cfg_args(scen("tip_press.yaml")) + " --rcm-tol 1e-9 --quiet --out " + dir.string());
  EXPECT_EQ(o.code, 4) << o.output;
}

TEST(Cli, FaultExitCode) {
  const auto dir = scratch("fault");
  // Joint 1 may move 0.05 deg; a sideways push drives it out.
  const auto f = write_file(dir / "fault.yaml",
                            "chain:\n  dh:\n"
                            "    - {a: 0, alpha_deg: 90,  d: 0.3105, limits_deg: [19.95, 20.05]}\n"
                            "    - {a: 0, alpha_deg: -90, d: 0.0,    limits_deg: [-120, 120]}\n"
                            "    - {a: 0, alpha_deg: -90, d: 0.4,    limits_deg: [-170, 170]}\n"
                            "    - {a: 0, alpha_deg: 90,  d: 0.0,    limits_deg: [-120, 120]}\n"
                            "    - {a: 0, alpha_deg: 90,  d: 0.39,   limits_deg: [-170, 170]}\n"
                            "    - {a: 0, alpha_deg: -90, d: 0.0,    limits_deg: [-120, 120]}\n"
                            "    - {a: 0, alpha_deg: 0,   d: 0.078,  limits_deg: [-170, 170]}\n"
                            "scenario:\n  duration: 3\n  force:\n    frame: tool\n"
                            "    press: {direction: [0, 1, 0], approach_force: 10, t_rest: 0}\n");
  const auto o = rcmsim("run " + cfg_args(f) + " --out " + (dir / "out").string());
  EXPECT_EQ(o.code, 3) << o.output;
  EXPECT_NE(o.output.find("joint_limit"), std::string::npos) << o.output;
  EXPECT_TRUE(fs::exists(dir / "out" / "trace.tsv"));
}

TEST(Cli, LiveSessionStopsOnInterrupt) {
  const auto dir = scratch("live");
  int pipefd[2];
  ASSERT_EQ(::pipe(pipefd), 0);
  const pid_t pid = ::fork();
  ASSERT_GE(pid, 0);
  if (pid == 0) {
    ::dup2(pipefd[1], STDOUT_FILENO);
    ::close(pipefd[0]);
    const std::string config = scen("default.yaml");
    const std::string out = (dir / "out").string();
    ::execl(RCMSIM_PATH, RCMSIM_PATH, "run", "--config", config.c_str(), "--live", "127.0.0.1:0", "--out",
            out.c_str(), "--quiet", static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(pipefd[1]);
  std::string line;
  char c;
  while (::read(pipefd[0], &c, 1) == 1 && c != '\n') line += c;
  const auto at = line.find("port ");
  ASSERT_NE(at, std::string::npos) << line;
  const int port = std::stoi(line.substr(at + 5));

  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in sa{};
  sa.sin_family = AF_INET;
  sa.sin_port = htons(static_cast<std::uint16_t>(port));
  inet_pton(AF_INET, "127.0.0.1", &sa.sin_addr);
  ASSERT_EQ(::connect(fd, reinterpret_cast<sockaddr*>(&sa), sizeof sa), 0);
  const std::string cmd = encode_frame(Json{{"type", "wrench"}, {"force", {0.0, 1.0, 0.0}}});
  ASSERT_EQ(::send(fd, cmd.data(), cmd.size(), 0), static_cast<ssize_t>(cmd.size()));
  FrameDecoder dec;
  std::vector<std::string> types;
  char buf[65536];
  while (types.size() < 10) {
    pollfd p{fd, POLLIN, 0};
    ASSERT_GT(::poll(&p, 1, 3000), 0);
    const ssize_t n = ::recv(fd, buf, sizeof buf, 0);
    ASSERT_GT(n, 0);
    for (const auto& s : dec.feed(buf, static_cast<std::size_t>(n))) types.push_back(Json::parse(s)["type"]);
  }
  EXPECT_EQ(types.front(), "scene");
  EXPECT_EQ(types.back(), "state");
  ::kill(pid, SIGINT);
  int status = 0;
  ::waitpid(pid, &status, 0);
  ::close(fd);
  ::close(pipefd[0]);
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), 0);
  EXPECT_TRUE(fs::exists(dir / "out" / "report.json"));
  EXPECT_EQ(rcmsim("replay --quiet " + (dir / "out" / "trace.tsv").string()).code, 0);
}

}  // namespace
}  // namespace rcm
