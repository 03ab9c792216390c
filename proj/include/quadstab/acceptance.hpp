#pragma once

// Fixed acceptance suite with pinned seeds. Shared by `quadstab check` and
// the acceptance test binary.

#include <iosfwd>
#include <string>
#include <vector>

namespace quadstab {

/// Deliberate defects for negative controls.
enum class Mutation {
  none,
  closure,  // drop a quad edge right after convergence
  flip_y,   // order_compare with the y axis convention flipped
};
Mutation parse_mutation(std::string_view s);

struct AcceptanceOptions {
  int seeds = 100;         // per n, d = 2
  int d3_seeds = 25;       // per n, d = 3
  int hop_seeds = 20;      // per n, min-dist placement
  int order_pairs = 100000;
  Mutation mutation = Mutation::none;
  std::ostream* progress = nullptr;  // optional per-group timing lines
};

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
};

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opts);

/// "PASS  3 monotonic-geo: ..." style line.
std::string format_result(const CriterionResult& r);

}  // namespace quadstab
