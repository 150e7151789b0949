#include "hetrl/serialize.hpp"

#include <fstream>
#include <string>

namespace hetrl {

namespace {

json nest_sa(const Shape& sh, const numvec& table) {
    json out = json::array();
    for (int h = 0; h < sh.horizon; ++h) {
        json step = json::array();
        for (int s = 0; s < sh.num_states; ++s) {
            json row = json::array();
            for (int a = 0; a < sh.num_actions; ++a) row.push_back(table[sh.sa(h, s, a)]);
            step.push_back(std::move(row));
        }
        out.push_back(std::move(step));
    }
    return out;
}

json nest_sas(const Shape& sh, const numvec& table) {
    json out = json::array();
    for (int h = 0; h < sh.horizon; ++h) {
        json step = json::array();
        for (int s = 0; s < sh.num_states; ++s) {
            json actions = json::array();
            for (int a = 0; a < sh.num_actions; ++a) {
                json row = json::array();
                for (int n = 0; n < sh.num_states; ++n) row.push_back(table[sh.sas(h, s, a, n)]);
                actions.push_back(std::move(row));
            }
            step.push_back(std::move(actions));
        }
        out.push_back(std::move(step));
    }
    return out;
}

/// Flattens a nested array, checking every level has the expected length.
void flatten_into(const json& j, std::span<const int> dims, numvec& out, const char* field) {
    if (dims.empty()) {
        if (!j.is_number()) throw InputError(std::string(field) + ": expected a number");
        out.push_back(j.get<double>());
        return;
    }
    if (!j.is_array() || int(j.size()) != dims[0])
        throw ShapeError(std::string(field) + ": nested array has wrong length");
    for (const auto& item : j) flatten_into(item, dims.subspan(1), out, field);
}

numvec flatten(const json& j, std::initializer_list<int> dims, const char* field) {
    numvec out;
    std::vector<int> d(dims);
    flatten_into(j.at(field), d, out, field);
    return out;
}

int get_positive(const json& j, const char* field) {
    const int v = j.at(field).get<int>();
    if (v <= 0) throw InputError(std::string(field) + " must be positive");
    return v;
}

void expect_kind(const json& j, const char* kind) {
    if (j.contains("kind") && j.at("kind").get<std::string>() != kind)
        throw InputError(std::string("expected an instance of kind '") + kind + "'");
}

json mixed_to_json(const MixedPolicy& p) {
    const Shape sh{p.horizon(), p.num_states(), p.num_actions()};
    return {{"kind", "mixed"},
            {"horizon", p.horizon()},
            {"num_states", p.num_states()},
            {"num_actions", p.num_actions()},
            {"probs", nest_sa(sh, p.probs())}};
}

MixedPolicy mixed_from_json(const json& j) {
    const int H = get_positive(j, "horizon"), S = get_positive(j, "num_states"),
              A = get_positive(j, "num_actions");
    return MixedPolicy(H, S, A, flatten(j, {H, S, A}, "probs"));
}

} // namespace

json to_json(const EpisodicMdp& mdp) {
    const Shape& sh = mdp.shape();
    return {{"kind", "mdp"},
            {"horizon", sh.horizon},
            {"num_states", sh.num_states},
            {"num_actions", sh.num_actions},
            {"transitions", nest_sas(sh, mdp.transitions())},
            {"rewards", nest_sa(sh, mdp.rewards())}};
}

json to_json(const ZeroSumGame& game) {
    const int H = game.horizon(), S = game.num_states();
    const int A1 = game.max_actions(), A2 = game.min_actions();
    json trans = json::array(), rew = json::array();
    for (int h = 0; h < H; ++h) {
        json th = json::array(), rh = json::array();
        for (int s = 0; s < S; ++s) {
            json ts = json::array(), rs = json::array();
            for (int a1 = 0; a1 < A1; ++a1) {
                json ta = json::array(), ra = json::array();
                for (int a2 = 0; a2 < A2; ++a2) {
                    json row = json::array();
                    for (int n = 0; n < S; ++n) row.push_back(game.transition(h, s, a1, a2, n));
                    ta.push_back(std::move(row));
                    ra.push_back(game.reward(h, s, a1, a2));
                }
                ts.push_back(std::move(ta));
                rs.push_back(std::move(ra));
            }
            th.push_back(std::move(ts));
            rh.push_back(std::move(rs));
        }
        trans.push_back(std::move(th));
        rew.push_back(std::move(rh));
    }
    return {{"kind", "game"},        {"horizon", H},         {"num_states", S},
            {"num_actions", {A1, A2}}, {"transitions", trans}, {"rewards", rew}};
}

json to_json(const RobustSpec& spec) {
    json j = to_json(spec.nominal());
    j["kind"] = "robust";
    j["sigma"] = spec.sigma();
    return j;
}

json to_json(const InitDist& xi) { return xi.probs(); }

json to_json(const Policy& policy) {
    if (const auto* det = std::get_if<DeterministicPolicy>(&policy)) {
        json rows = json::array();
        for (int h = 0; h < det->horizon(); ++h) {
            json row = json::array();
            for (int s = 0; s < det->num_states(); ++s) row.push_back(det->action(h, s));
            rows.push_back(std::move(row));
        }
        return {{"kind", "deterministic"},
                {"horizon", det->horizon()},
                {"num_states", det->num_states()},
                {"actions", rows}};
    }
    if (const auto* mixed = std::get_if<MixedPolicy>(&policy)) return mixed_to_json(*mixed);
    const auto& prod = std::get<ProductPolicy>(policy);
    return {{"kind", "product"},
            {"max", mixed_to_json(prod.max_player)},
            {"min", mixed_to_json(prod.min_player)}};
}

json to_json(const ValueTable& values) {
    json rows = json::array();
    for (int h = 0; h <= values.horizon(); ++h) {
        json row = json::array();
        for (int s = 0; s < values.num_states(); ++s) row.push_back(values(h, s));
        rows.push_back(std::move(row));
    }
    return rows;
}

EpisodicMdp mdp_from_json(const json& j) {
    const int H = get_positive(j, "horizon"), S = get_positive(j, "num_states"),
              A = get_positive(j, "num_actions");
    return EpisodicMdp(Shape{H, S, A}, flatten(j, {H, S, A, S}, "transitions"),
                       flatten(j, {H, S, A}, "rewards"));
}

ZeroSumGame game_from_json(const json& j) {
    expect_kind(j, "game");
    const int H = get_positive(j, "horizon"), S = get_positive(j, "num_states");
    const json& acts = j.at("num_actions");
    if (!acts.is_array() || acts.size() != 2)
        throw InputError("game num_actions must be [A1, A2]");
    const int A1 = acts[0].get<int>(), A2 = acts[1].get<int>();
    if (A1 <= 0 || A2 <= 0) throw InputError("game action counts must be positive");
    return ZeroSumGame(H, S, A1, A2, flatten(j, {H, S, A1, A2, S}, "transitions"),
                       flatten(j, {H, S, A1, A2}, "rewards"));
}

RobustSpec robust_from_json(const json& j) {
    if (!j.contains("sigma")) throw InputError("robust instance requires 'sigma'");
    return RobustSpec(mdp_from_json(j), j.at("sigma").get<double>());
}

InitDist init_dist_from_json(const json& j) { return InitDist(j.get<numvec>()); }

Policy policy_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "deterministic") {
        const int H = get_positive(j, "horizon"), S = get_positive(j, "num_states");
        std::vector<int> actions;
        const json& rows = j.at("actions");
        if (!rows.is_array() || int(rows.size()) != H) throw ShapeError("actions: expected H rows");
        for (const auto& row : rows) {
            if (!row.is_array() || int(row.size()) != S) throw ShapeError("actions: expected S entries");
            for (const auto& a : row) actions.push_back(a.get<int>());
        }
        return DeterministicPolicy(H, S, std::move(actions));
    }
    if (kind == "mixed") return mixed_from_json(j);
    if (kind == "product")
        return ProductPolicy{mixed_from_json(j.at("max")), mixed_from_json(j.at("min"))};
    throw InputError("unknown policy kind '" + kind + "'");
}

Instance instance_from_json(const json& j) {
    const std::string kind = j.value("kind", std::string("mdp"));
    if (kind == "mdp") {
        if (j.contains("sigma")) return robust_from_json(j);
        return mdp_from_json(j);
    }
    if (kind == "game") return game_from_json(j);
    if (kind == "robust") return robust_from_json(j);
    throw InputError("unknown instance kind '" + kind + "'");
}

json instance_to_json(const Instance& instance) {
    return std::visit([](const auto& x) { return to_json(x); }, instance);
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw InputError(path.string() + ": " + e.what());
    }
}

void write_json_file(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

} // namespace hetrl
