// Attack harness: runs the lab attacks and writes machine-checkable reports.
#include <CLI11.hpp>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "netadmin/error.hpp"
#include "netadmin/lab.hpp"
#include "netadmin/redteam.hpp"

using namespace netadmin;

int main(int argc, char** argv) {
  CLI::App app{"NetAdmin red-team harness"};
  app.require_subcommand(1);

  std::string attack = "all", profile = "vulnerable", report_path, dir;
  std::optional<std::uint64_t> seed;
  std::size_t submissions = 500;

  auto* run = app.add_subcommand("run", "bring a lab up, attack it, tear it down");
  run->add_option("--attack", attack)->check(CLI::IsMember({"overflow", "injection", "tamper", "keyexfil", "all"}));
  run->add_option("--profile", profile)->check(CLI::IsMember({"vulnerable", "hardened"}));
  run->add_option("--report", report_path, "write the JSON report here");
  run->add_option("--seed", seed);
  run->add_option("--dir", dir, "lab directory (default: a fresh temporary directory)");

  auto* contain = app.add_subcommand("contain", "random workload, then count out-of-subnet table entries");
  contain->add_option("--profile", profile)->check(CLI::IsMember({"vulnerable", "hardened"}));
  contain->add_option("--submissions", submissions);
  contain->add_option("--seed", seed);
  contain->add_option("--dir", dir);

  CLI11_PARSE(app, argc, argv);

  lab::LabOptions o;
  o.mode = *parse_profile_mode(profile);
  o.seed = seed;
  o.dir = dir.empty() ? std::filesystem::temp_directory_path() /
                            ("netadmin-redteam-" + profile + "-" + std::to_string(::getpid()))
                      : std::filesystem::path(dir);

  try {
    if (*contain) {
      auto topo = lab::up(o);
      redteam::WorkloadResult res;
      try {
        res = redteam::run_workload(topo, seed.value_or(1), submissions, true);
      } catch (...) {
        lab::down(topo);
        throw;
      }
      lab::down(topo);
      std::cout << "submitted " << res.submitted << ", accepted " << res.accepted << ", tampered "
                << res.tampered << ", table entries " << res.table.entries.size() << ", out of subnet "
                << res.out_of_subnet << '\n';
      for (const auto& [kind, n] : res.rejected) std::cout << "  rejected " << kind << ": " << n << '\n';
      return 0;
    }

    std::vector<redteam::Attack> attacks;
    if (attack == "all") {
      attacks.assign(std::begin(redteam::kAllAttacks), std::end(redteam::kAllAttacks));
    } else {
      attacks.push_back(*redteam::parse_attack(attack));
    }
    const auto t0 = std::chrono::steady_clock::now();
    auto reports = redteam::run_suite(o, attacks);
    const auto secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    for (const auto& r : reports) {
      std::cout << redteam::to_string(r.attack) << " [" << to_string(r.profile)
                << "]: succeeded=" << (r.succeeded ? "true" : "false") << '\n';
    }
    std::cout << "elapsed " << secs << " s\n";
    const std::string doc = reports.size() == 1 ? reports.front().to_json() : redteam::reports_to_json(reports);
    if (!report_path.empty()) {
      std::ofstream(report_path) << doc << '\n';
    } else {
      std::cout << doc << '\n';
    }
    if (dir.empty()) std::filesystem::remove_all(o.dir);
    return 0;
  } catch (const Error& e) {
    std::cerr << "redteam: " << to_string(e.kind()) << ": " << e.what() << '\n';
    return 1;
  }
}
