#pragma once

#include <optional>
#include <vector>

#include "valnet/follower.hpp"
#include "valnet/milp.hpp"
#include "valnet/network.hpp"

namespace valnet {

// Distinct follower responses used by the sampled max-min models.
struct SampleSet {
    std::vector<std::vector<int>> members;

    bool contains(const std::vector<int>& y) const;
    bool insert(const std::vector<int>& y);  // false when already present
    std::size_t size() const { return members.size(); }
};

enum class StrengthenMode { ExactPaths, HyperrectangleRelax };

struct RobustModelParams {
    double epsilon = 0.0;  // 0 = auto: 1 on integral interaction data
    double big_M = 0.0;    // 0 = auto
    int max_iterations = 5;
    StrengthenMode mode = StrengthenMode::HyperrectangleRelax;
    bool outer_leader_rows = false;  // fold leader-only rows into the outer problem
};

// Leader-decision region for the outer maximization.
struct MaxMinRegion {
    enum class Kind { FreeBinary, Box, SubNetwork };
    Kind kind = Kind::FreeBinary;
    Hyperrectangle box;              // Kind::Box
    const ValueNetwork* net = nullptr;  // Kind::SubNetwork
    int terminal = -1;

    static MaxMinRegion everything(const BilevelInstance&) { return MaxMinRegion{}; }
    static MaxMinRegion in_box(Hyperrectangle r) {
        MaxMinRegion out;
        out.kind = Kind::Box;
        out.box = std::move(r);
        return out;
    }
    static MaxMinRegion paths_to(const ValueNetwork& net, int terminal) {
        MaxMinRegion out;
        out.kind = Kind::SubNetwork;
        out.net = &net;
        out.terminal = terminal;
        return out;
    }
};

struct MaxMinResult {
    double value = -kInf;       // sampled max-min bound
    std::vector<int> argmax_x;  // lexicographically largest maximizer
    bool all_samples_blocked = false;
};

// max over x in region of min over sampled y feasible at x of d*y,
// as the blocking MILP with one binary per (sample, interaction row).
class SampleMaxMin {
public:
    explicit SampleMaxMin(const FollowerOracle& oracle, RobustModelParams params = {});

    // Empty result: the region admits no leader decision.
    std::optional<MaxMinResult> solve(const MaxMinRegion& region, const std::vector<std::vector<int>>& samples,
                                      const std::vector<std::vector<int>>& excluded_x = {}) const;

    const RobustModelParams& params() const { return params_; }

private:
    const FollowerOracle& oracle_;
    RobustModelParams params_;
};

// Distinct follower responses collected by the big-M cutting-plane loop.
SampleSet init_samples(const FollowerOracle& oracle);

// One big-M run shared between the model constant and the starting samples.
struct StrengthenSetup {
    RobustModelParams params;
    SampleSet samples;
};
StrengthenSetup prepare_strengthening(const FollowerOracle& oracle);

struct StrengthenOutcome {
    double old_value = 0.0;
    double new_value = 0.0;
    std::vector<int> last_x;
    int iterations = 0;
    bool unreachable = false;  // no leader decision maps into the terminal region
};

// Two-step sampling loop on one terminal: solve the sampled max-min, lower
// the terminal value to the bound, add the true follower response at the
// maximizer, stop on repetition or the iteration cap.
StrengthenOutcome strengthen_terminal(const FollowerOracle& oracle, ValueNetwork& net, int terminal,
                                      const RobustModelParams& params, SampleSet& samples);

// Strengthens every terminal, loosest (largest value) first, sharing and
// growing one sample set (auto-initialized when empty).
void strengthen_network(const FollowerOracle& oracle, ValueNetwork& net, const RobustModelParams& params,
                        SampleSet* samples = nullptr);

RobustModelParams default_params(const FollowerOracle& oracle);

}  // namespace valnet
