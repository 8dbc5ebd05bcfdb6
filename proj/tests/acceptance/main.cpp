// Runs the acceptance criteria and prints one verdict line per criterion.
// Usage: acceptance [work_dir [ids]], ids a comma list such as 1,2,9.

#include <exception>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>

#include "criteria.hpp"

namespace fs = std::filesystem;
using acceptance::Verdict;

namespace {

struct Task {
  std::vector<int> ids;  // criteria this task decides
  bool needs_data = false;
  std::function<std::vector<Verdict>()> run;
};

std::set<int> parse_ids(const std::string& text) {
  std::set<int> ids;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) ids.insert(std::stoi(item));
  return ids;
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "eccnn_acceptance";
  const std::set<int> selected = argc > 2 ? parse_ids(argv[2]) : std::set<int>{1, 2, 3, 4, 5, 6, 7, 8, 9};
  fs::remove_all(work);
  fs::create_directories(work);

  std::optional<acceptance::ExperimentData> data;
  auto one = [](Verdict v) { return std::vector<Verdict>{std::move(v)}; };
  const std::vector<Task> tasks{
      {{1}, false, [&] { return one(acceptance::gradient_suite()); }},
      {{2}, false, [&] { return one(acceptance::structural_equivalences()); }},
      {{3}, false, [&] { return one(acceptance::oracle_checks()); }},
      {{4, 5}, true, [&] { return acceptance::conditioning_and_stage_ablations(*data); }},
      {{6}, false, [&] { return one(acceptance::initialization_ablation(work)); }},
      {{7}, false, [&] { return one(acceptance::overfit_sanity(work)); }},
      {{8}, true, [&] { return one(acceptance::benchmark_harness(*data, work)); }},
      {{9}, false, [&] { return one(acceptance::determinism(work)); }},
  };

  int ran = 0, failed = 0;
  for (const auto& task : tasks) {
    bool wanted = false;
    for (int id : task.ids) wanted = wanted || selected.count(id);
    if (!wanted) continue;
    std::vector<Verdict> verdicts;
    try {
      if (task.needs_data && !data) data = acceptance::make_experiment_data(work);
      verdicts = task.run();
    } catch (const std::exception& e) {
      for (int id : task.ids) verdicts.push_back({id, false, std::string("error: ") + e.what()});
    }
    for (const auto& v : verdicts) {
      if (!selected.count(v.id)) continue;
      ++ran;
      failed += !v.pass;
      std::cout << "criterion " << v.id << ": " << (v.pass ? "PASS" : "FAIL") << "  " << v.detail << std::endl;
    }
  }
  if (failed) {
    std::cout << failed << " of " << ran << " criteria failed" << std::endl;
  } else {
    std::cout << "all " << ran << " criteria passed" << std::endl;
  }
  return failed ? 1 : 0;
}
