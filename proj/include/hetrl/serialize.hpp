#pragma once

#include "hetrl/evaluation.hpp"
#include "hetrl/mdp.hpp"
#include "hetrl/policy.hpp"

#include <json.hpp>

#include <filesystem>
#include <variant>

namespace hetrl {

using json = nlohmann::json;

// Instance files are JSON objects:
//
//   {
//     "kind": "mdp" | "game" | "robust",
//     "horizon": H,
//     "num_states": S,
//     "num_actions": A            (mdp, robust)  |  [A1, A2]  (game),
//     "transitions": P[h][s][a][s']              |  P[h][s][a1][a2][s'],
//     "rewards":     r[h][s][a]                  |  r[h][s][a1][a2],
//     "sigma": KL radius                          (robust only)
//   }
//
// Steps, states and actions are 0-based. Doubles are written with the
// shortest representation that round-trips, so save/load is lossless.

json to_json(const EpisodicMdp& mdp);
json to_json(const ZeroSumGame& game);
json to_json(const RobustSpec& spec);
json to_json(const InitDist& xi);
json to_json(const Policy& policy);
json to_json(const ValueTable& values);

EpisodicMdp mdp_from_json(const json& j);
ZeroSumGame game_from_json(const json& j);
RobustSpec robust_from_json(const json& j);
InitDist init_dist_from_json(const json& j);
Policy policy_from_json(const json& j);

using Instance = std::variant<EpisodicMdp, ZeroSumGame, RobustSpec>;

Instance instance_from_json(const json& j);
json instance_to_json(const Instance& instance);

json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const json& j);

} // namespace hetrl
