#include "loadcast/oracle.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <string>
#include <unordered_map>
#include <unordered_set>

#include "loadcast/error.hpp"

namespace loadcast {

void SolutionDescription::add(int pattern_id, int multiplicity) {
    auto it = std::lower_bound(loadings.begin(), loadings.end(),
                               std::make_pair(pattern_id, 0));
    if (it != loadings.end() && it->first == pattern_id) {
        it->second += multiplicity;
    } else {
        loadings.insert(it, {pattern_id, multiplicity});
    }
}

int SolutionDescription::total_loadings() const {
    int n = 0;
    for (const auto& [id, mult] : loadings) n += mult;
    return n;
}

int SolutionDescription::total_containers(const RailcarCatalog& cat) const {
    int n = 0;
    for (const auto& [id, mult] : loadings) {
        const LoadPattern& p = cat.pattern(id);
        n += mult * std::accumulate(p.counts.begin(), p.counts.end(), 0);
    }
    return n;
}

int SolutionDescription::total_slots(const RailcarCatalog& cat) const {
    int n = 0;
    for (const auto& [id, mult] : loadings) n += mult * cat.pattern(id).min_platforms;
    return n;
}

std::vector<int> SolutionDescription::railcar_usage(const RailcarCatalog& cat) const {
    std::vector<int> usage(cat.num_railcar_types(), 0);
    for (const auto& [id, mult] : loadings) usage[cat.pattern_type(id)] += mult;
    return usage;
}

std::vector<int> SolutionDescription::container_usage(const RailcarCatalog& cat) const {
    std::vector<int> usage(cat.num_container_types(), 0);
    for (const auto& [id, mult] : loadings) {
        const CountVec& counts = cat.pattern(id).counts;
        for (std::size_t l = 0; l < counts.size(); ++l) usage[l] += mult * counts[l];
    }
    return usage;
}

std::vector<std::vector<CountVec>> SolutionDescription::loadings_by_type(
    const RailcarCatalog& cat) const {
    std::vector<std::vector<CountVec>> by_type(cat.num_railcar_types());
    for (const auto& [id, mult] : loadings) {
        const LoadPattern& p = cat.pattern(id);
        for (int m = 0; m < mult; ++m) by_type[p.railcar_type].push_back(p.counts);
    }
    return by_type;
}

// ---------------------------------------------------------------------------
// Per-railcar fit: subset DP over the flattened container list. A platform
// takes nothing, one bottom container, or a bottom plus a top.

namespace {

// relaxed = a top-allowed container may sit alone on a platform, standing in
// for a partial load whose bottom has not been assigned yet. Used as a
// monotone filter while a railcar is being filled; never for final loads.
FitResult fit_railcar_impl(const RailcarType& rc,
                           const std::vector<std::vector<double>>& weights,
                           bool relaxed) {
    struct Item {
        int cls;
        double w;
    };
    std::vector<Item> items;
    double total = 0.0;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        for (double w : weights[l]) {
            items.push_back({static_cast<int>(l), w});
            total += w;
        }
    }
    const int n = static_cast<int>(items.size());
    if (n == 0) return {true, 0};
    if (total > rc.weight_cap) return {false, 0};
    if (n > 2 * static_cast<int>(rc.platforms.size()) || n > 20) return {false, 0};

    const int full = (1 << n) - 1;
    constexpr int kInf = 1 << 20;
    std::vector<int> dp(full + 1, kInf);
    dp[0] = 0;
    std::vector<int> ndp;

    auto allowed = [](const std::vector<int>& list, int cls) {
        return std::find(list.begin(), list.end(), cls) != list.end();
    };

    const int min_possible = (n + 1) / 2;
    for (const PlatformSpec& plat : rc.platforms) {
        ndp = dp;  // platform left empty
        for (int mask = 0; mask <= full; ++mask) {
            if (dp[mask] >= kInf) continue;
            const int base = dp[mask] + 1;
            for (int i = 0; i < n; ++i) {
                if (mask & (1 << i)) continue;
                if (items[i].w > plat.weight_cap) continue;
                if (relaxed && allowed(plat.allowed_top, items[i].cls)) {
                    const int mi = mask | (1 << i);  // floating top
                    if (base < ndp[mi]) ndp[mi] = base;
                }
                if (!allowed(plat.allowed_bottom, items[i].cls)) continue;
                const int mi = mask | (1 << i);
                if (base < ndp[mi]) ndp[mi] = base;
                for (int j = 0; j < n; ++j) {
                    if (j == i || (mi & (1 << j))) continue;
                    if (!allowed(plat.allowed_top, items[j].cls)) continue;
                    if (items[i].w + items[j].w > plat.weight_cap) continue;
                    const int mj = mi | (1 << j);
                    if (base < ndp[mj]) ndp[mj] = base;
                }
            }
        }
        dp.swap(ndp);
        if (dp[full] == min_possible) break;
    }
    if (dp[full] >= kInf) return {false, 0};
    return {true, dp[full]};
}

}  // namespace

FitResult fit_railcar(const RailcarType& rc,
                      const std::vector<std::vector<double>>& weights) {
    return fit_railcar_impl(rc, weights, false);
}

// ---------------------------------------------------------------------------
// Exact solver.
//
// Within a length class, swapping any loaded container for a lighter unused
// one keeps every cap satisfied and leaves the pattern, platform and railcar
// usage untouched. Some optimal solution therefore loads exactly the lightest
// k_l containers of each class. The search scans the total count downward,
// asks for each per-class split whether the lightest prefixes pack onto the
// railcars, and once the best count is known minimizes platforms and railcars
// among packings of that count.

namespace {

struct PackItem {
    int cls;
    int idx;   // position in the ascending per-class weight array
    double w;
};

struct RailcarState {
    int type = 0;
    CountVec counts;
    double weight = 0.0;
    int items = 0;
    int fit_platforms = 0;           // min platforms for the current load
    std::vector<int> idx_by_cls_flat;  // item indices, used for memo keys
};

struct FitKeyHash {
    std::size_t operator()(unsigned __int128 k) const {
        std::uint64_t s = static_cast<std::uint64_t>(k) ^
                          static_cast<std::uint64_t>(k >> 64) * 0x9e3779b97f4a7c15ULL;
        return static_cast<std::size_t>(splitmix64_mix(s));
    }
    static std::uint64_t splitmix64_mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
};

struct PackerContext {
    const RailcarCatalog& cat;
    std::vector<std::vector<double>> weights;  // ascending per class
    std::vector<int> rc_of;                    // instantiated railcar types
    std::vector<RailcarState> state;
    std::vector<int> max_total;                 // per type
    std::vector<CountVec> max_class;            // per type
    std::vector<std::unordered_set<std::uint64_t>> dominated;  // closure of patterns
    std::vector<std::unordered_map<std::uint64_t, int>> pattern_index;

    std::uint64_t nodes = 0;  // work units, not plain node count
    std::uint64_t budget = 0;
    bool aborted = false;

    // Incrementally maintained over the current partial assignment.
    double weight_headroom = 0.0;
    int slot_headroom = 0;
    long long plat_lb_sum = 0;
    long long used_count = 0;

    std::unordered_map<unsigned __int128, FitResult, FitKeyHash> fit_memo;

    // Best complete solution seen anywhere, by full cost tuple.
    Cost best_cost{-1, 0, 0};
    OperationalSolution best;

    std::uint64_t counts_key(const CountVec& c) const {
        std::uint64_t key = 0;
        for (int v : c) key = (key << 10) | static_cast<std::uint64_t>(v);
        return key;
    }
};

FitResult fit_current(PackerContext& ctx, const RailcarState& rs, bool relaxed) {
    // Injective key: <=11 item indices of 10 bits, per-class counts, type,
    // relaxed bit.
    unsigned __int128 key = 0;
    const bool use_memo =
        rs.type < 128 &&
        10 * rs.idx_by_cls_flat.size() + 4 * ctx.weights.size() + 8 <= 128;
    if (use_memo) {
        for (int v : rs.idx_by_cls_flat) key = (key << 10) | static_cast<unsigned>(v);
        for (int c : rs.counts) key = (key << 4) | static_cast<unsigned>(c & 15);
        key = (key << 8) | static_cast<unsigned>(rs.type << 1) |
              static_cast<unsigned>(relaxed);
        auto it = ctx.fit_memo.find(key);
        if (it != ctx.fit_memo.end()) return it->second;
    }
    const int L = static_cast<int>(ctx.weights.size());
    std::vector<std::vector<double>> chosen(L);
    int at = 0;
    for (int l = 0; l < L; ++l) {
        for (int c = 0; c < rs.counts[l]; ++c) {
            chosen[l].push_back(ctx.weights[l][rs.idx_by_cls_flat[at++]]);
        }
    }
    // charge the subset DP to the work budget
    ctx.nodes += 1 + ((1ull << std::min<std::size_t>(rs.idx_by_cls_flat.size(), 20)) >> 2);
    const FitResult fit = fit_railcar_impl(ctx.cat.railcars[rs.type], chosen, relaxed);
    if (use_memo) ctx.fit_memo.emplace(key, fit);
    return fit;
}

// Validate the complete assignment with exact fits and record it when it
// beats the incumbent. Returns false when some railcar only fit under the
// relaxed filter.
bool record_solution(PackerContext& ctx, long long loaded) {
    Cost cost{loaded, 0, 0};
    OperationalSolution sol;
    for (const RailcarState& rs : ctx.state) {
        if (rs.items == 0) continue;
        const FitResult exact = fit_current(ctx, rs, false);
        if (!exact.feasible) return false;
        cost.used_platforms += exact.min_platforms;
        cost.used_railcars += 1;
        RailcarLoad load;
        load.railcar_type = rs.type;
        load.pattern_k = ctx.pattern_index[rs.type].at(ctx.counts_key(rs.counts));
        load.platforms_used = exact.min_platforms;
        const int L = static_cast<int>(ctx.weights.size());
        load.weights.resize(L);
        int at = 0;
        for (int l = 0; l < L; ++l) {
            for (int c = 0; c < rs.counts[l]; ++c) {
                load.weights[l].push_back(ctx.weights[l][rs.idx_by_cls_flat[at++]]);
            }
            std::sort(load.weights[l].begin(), load.weights[l].end());
        }
        sol.loads.push_back(std::move(load));
    }
    if (better(cost, ctx.best_cost)) {
        ctx.best_cost = cost;
        ctx.best = std::move(sol);
    }
    return true;
}

// Assign items[i..] to railcars. In feasibility mode stops as soon as one
// complete packing exists; in optimize mode explores with a platform bound.
bool pack_dfs(PackerContext& ctx, const std::vector<PackItem>& items, std::size_t i,
              double remaining_weight, bool optimize, long long loaded) {
    if (ctx.aborted) return false;
    if (i == items.size()) {
        return record_solution(ctx, loaded);
    }
    if (ctx.weight_headroom < remaining_weight) return false;
    if (ctx.slot_headroom < static_cast<int>(items.size() - i)) return false;
    if (optimize &&
        !better(Cost{loaded, ctx.plat_lb_sum, ctx.used_count}, ctx.best_cost)) {
        return false;
    }

    const PackItem& item = items[i];
    bool found = false;
    bool tried_empty_of_type[16] = {};
    const bool track_empty = ctx.cat.num_railcar_types() <= 16;
    for (RailcarState& rs : ctx.state) {
        if (rs.items == 0 && track_empty) {
            if (tried_empty_of_type[rs.type]) continue;  // identical empty railcars
            tried_empty_of_type[rs.type] = true;
        }
        const RailcarType& rc = ctx.cat.railcars[rs.type];
        if (rs.weight + item.w > rc.weight_cap) continue;
        if (rs.items + 1 > ctx.max_total[rs.type]) continue;
        if (rs.counts[item.cls] + 1 > ctx.max_class[rs.type][item.cls]) continue;
        rs.counts[item.cls]++;
        if (!ctx.dominated[rs.type].contains(ctx.counts_key(rs.counts))) {
            rs.counts[item.cls]--;
            continue;
        }
        // insert the index keeping per-class grouping (classes ascending,
        // indices ascending inside a class)
        int pos = 0;
        for (int l = 0; l < item.cls; ++l) pos += rs.counts[l];
        pos += rs.counts[item.cls] - 1;
        int at = 0;
        for (int l = 0; l < item.cls; ++l) at += rs.counts[l];
        int ins = at;
        while (ins < pos && rs.idx_by_cls_flat[ins] < item.idx) ++ins;
        rs.idx_by_cls_flat.insert(rs.idx_by_cls_flat.begin() + ins, item.idx);

        if (++ctx.nodes > ctx.budget) {
            ctx.aborted = true;
            rs.idx_by_cls_flat.erase(rs.idx_by_cls_flat.begin() + ins);
            rs.counts[item.cls]--;
            return found;
        }
        const FitResult fit = fit_current(ctx, rs, true);
        if (fit.feasible) {
            const int old_fit = rs.fit_platforms;
            rs.fit_platforms = fit.min_platforms;
            rs.weight += item.w;
            rs.items++;
            ctx.weight_headroom -= item.w;
            ctx.slot_headroom -= 1;
            ctx.plat_lb_sum += fit.min_platforms - old_fit;
            ctx.used_count += rs.items == 1 ? 1 : 0;
            const bool ok =
                pack_dfs(ctx, items, i + 1, remaining_weight - item.w, optimize, loaded);
            ctx.used_count -= rs.items == 1 ? 1 : 0;
            ctx.plat_lb_sum -= fit.min_platforms - old_fit;
            ctx.slot_headroom += 1;
            ctx.weight_headroom += item.w;
            rs.items--;
            rs.weight -= item.w;
            rs.fit_platforms = old_fit;
            found = found || ok;
        }
        rs.idx_by_cls_flat.erase(rs.idx_by_cls_flat.begin() + ins);
        rs.counts[item.cls]--;
        if (ctx.aborted) return found;
        if (found && !optimize) return true;
    }
    return found;
}

std::vector<PackItem> split_items(const PackerContext& ctx, const CountVec& split) {
    std::vector<PackItem> items;
    for (std::size_t l = 0; l < split.size(); ++l) {
        for (int i = 0; i < split[l]; ++i) {
            items.push_back({static_cast<int>(l), i, ctx.weights[l][i]});
        }
    }
    std::sort(items.begin(), items.end(), [](const PackItem& a, const PackItem& b) {
        if (a.w != b.w) return a.w > b.w;  // heaviest first: fail early
        if (a.cls != b.cls) return a.cls < b.cls;
        return a.idx < b.idx;
    });
    return items;
}

double prefix_weight(const PackerContext& ctx, const CountVec& split) {
    double total = 0.0;
    for (std::size_t l = 0; l < split.size(); ++l) {
        for (int i = 0; i < split[l]; ++i) total += ctx.weights[l][i];
    }
    return total;
}

// All splits of `total` across classes, class-0 count descending; respects
// per-class availability and aggregate per-class capacity.
void enumerate_splits(const std::vector<int>& avail, const CountVec& cap, int cls, int total,
                      CountVec& cur, std::vector<CountVec>& out) {
    const int L = static_cast<int>(avail.size());
    if (cls == L - 1) {
        if (total <= std::min(avail[cls], cap[cls])) {
            cur[cls] = total;
            out.push_back(cur);
        }
        return;
    }
    const int hi = std::min({avail[cls], cap[cls], total});
    for (int k = hi; k >= 0; --k) {
        cur[cls] = k;
        enumerate_splits(avail, cap, cls + 1, total - k, cur, out);
    }
}

// First-fit-decreasing floor: railcars in order, biggest patterns first,
// lightest remaining containers. Gives an initial complete solution.
void greedy_floor(PackerContext& ctx) {
    const int L = static_cast<int>(ctx.weights.size());
    std::vector<int> taken(L, 0);
    long long loaded = 0;
    for (RailcarState& rs : ctx.state) {
        const auto& pats = ctx.cat.patterns[rs.type];
        std::vector<int> order(pats.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            const int ta = std::accumulate(pats[a].counts.begin(), pats[a].counts.end(), 0);
            const int tb = std::accumulate(pats[b].counts.begin(), pats[b].counts.end(), 0);
            if (ta != tb) return ta > tb;
            return a < b;
        });
        for (int k : order) {
            const CountVec& want = pats[k].counts;
            bool enough = true;
            for (int l = 0; l < L; ++l) {
                enough = enough &&
                         taken[l] + want[l] <= static_cast<int>(ctx.weights[l].size());
            }
            if (!enough) continue;
            RailcarState trial = rs;
            trial.counts = want;
            trial.idx_by_cls_flat.clear();
            trial.weight = 0.0;
            for (int l = 0; l < L; ++l) {
                for (int c = 0; c < want[l]; ++c) {
                    trial.idx_by_cls_flat.push_back(taken[l] + c);
                    trial.weight += ctx.weights[l][taken[l] + c];
                }
            }
            const FitResult fit = fit_current(ctx, trial, false);
            if (!fit.feasible) continue;
            trial.items = std::accumulate(want.begin(), want.end(), 0);
            trial.fit_platforms = fit.min_platforms;
            rs = std::move(trial);
            for (int l = 0; l < L; ++l) taken[l] += want[l];
            loaded += rs.items;
            break;
        }
    }
    // greedy consumed prefixes per class, so the state is a valid packing
    record_solution(ctx, loaded);
    for (RailcarState& rs : ctx.state) {
        rs.counts.assign(L, 0);
        rs.idx_by_cls_flat.clear();
        rs.weight = 0.0;
        rs.items = 0;
        rs.fit_platforms = 0;
    }
}

}  // namespace

SolveResult solve_full_info(const Instance& inst, const RailcarCatalog& cat,
                            const SolverLimits& limits) {
    if (!inst.has_weights()) {
        throw ValidationError("solve_full_info needs second-stage weights");
    }
    const int L = cat.num_container_types();
    const int J = cat.num_railcar_types();

    PackerContext ctx{cat};
    ctx.budget = limits.node_budget;
    ctx.weights.resize(L);
    for (int l = 0; l < L; ++l) {
        ctx.weights[l] = inst.weights[l];
        std::sort(ctx.weights[l].begin(), ctx.weights[l].end());
    }

    for (int j = 0; j < J; ++j) {
        for (int c = 0; c < inst.railcar_counts[j]; ++c) ctx.rc_of.push_back(j);
    }
    ctx.state.resize(ctx.rc_of.size());
    for (std::size_t r = 0; r < ctx.rc_of.size(); ++r) {
        ctx.state[r].type = ctx.rc_of[r];
        ctx.state[r].counts.assign(L, 0);
    }

    ctx.max_total.assign(J, 0);
    ctx.max_class.assign(J, CountVec(L, 0));
    ctx.dominated.resize(J);
    ctx.pattern_index.resize(J);
    for (int j = 0; j < J; ++j) {
        for (std::size_t k = 0; k < cat.patterns[j].size(); ++k) {
            const LoadPattern& p = cat.patterns[j][k];
            ctx.pattern_index[j].emplace(ctx.counts_key(p.counts), static_cast<int>(k));
            ctx.max_total[j] = std::max(
                ctx.max_total[j], std::accumulate(p.counts.begin(), p.counts.end(), 0));
            for (int l = 0; l < L; ++l) {
                ctx.max_class[j][l] = std::max(ctx.max_class[j][l], p.counts[l]);
            }
            // closure: every count vector dominated by some pattern is a
            // legal intermediate load
            CountVec sub(L, 0);
            const auto grow = [&](const auto& self, int cls) -> void {
                if (cls == L) {
                    ctx.dominated[j].insert(ctx.counts_key(sub));
                    return;
                }
                for (int v = 0; v <= p.counts[cls]; ++v) {
                    sub[cls] = v;
                    self(self, cls + 1);
                }
            };
            grow(grow, 0);
        }
    }

    greedy_floor(ctx);
    const long long floor = ctx.best_cost.loaded_containers;

    // Count upper bound from geometry and per-class availability.
    std::vector<int> avail(L);
    CountVec cap_class(L, 0);
    long long cap_total = 0;
    double cap_weight = 0.0;
    for (int l = 0; l < L; ++l) avail[l] = static_cast<int>(ctx.weights[l].size());
    for (int type : ctx.rc_of) {
        cap_total += ctx.max_total[type];
        cap_weight += cat.railcars[type].weight_cap;
        for (int l = 0; l < L; ++l) cap_class[l] += ctx.max_class[type][l];
    }
    long long ub = std::min<long long>(inst.total_containers(), cap_total);
    {
        long long class_sum = 0;
        for (int l = 0; l < L; ++l) class_sum += std::min<long long>(avail[l], cap_class[l]);
        ub = std::min(ub, class_sum);
    }

    auto reset_sums = [&] {
        ctx.weight_headroom = cap_weight;
        ctx.slot_headroom = static_cast<int>(cap_total);
        ctx.plat_lb_sum = 0;
        ctx.used_count = 0;
    };

    // Scan the count downward for the best feasible prefix split.
    long long best_k = floor;
    CountVec cur(L, 0);
    for (long long k = ub; k > floor && !ctx.aborted; --k) {
        std::vector<CountVec> splits;
        enumerate_splits(avail, cap_class, 0, static_cast<int>(k), cur, splits);
        bool feasible = false;
        for (const CountVec& split : splits) {
            if (prefix_weight(ctx, split) > cap_weight) continue;
            const std::vector<PackItem> items = split_items(ctx, split);
            reset_sums();
            if (pack_dfs(ctx, items, 0, prefix_weight(ctx, split), false, k)) {
                feasible = true;
                break;
            }
            if (ctx.aborted) break;
        }
        if (feasible) {
            best_k = k;
            break;
        }
    }

    // Optimize platforms and railcars among packings of the best count.
    if (!ctx.aborted && best_k > 0) {
        std::vector<CountVec> splits;
        enumerate_splits(avail, cap_class, 0, static_cast<int>(best_k), cur, splits);
        for (const CountVec& split : splits) {
            if (ctx.aborted) break;
            if (prefix_weight(ctx, split) > cap_weight) continue;
            const std::vector<PackItem> items = split_items(ctx, split);
            reset_sums();
            pack_dfs(ctx, items, 0, prefix_weight(ctx, split), true, best_k);
        }
    }

    SolveResult result;
    result.solution = std::move(ctx.best);
    result.exact = !ctx.aborted;
    result.nodes = ctx.nodes;
    return result;
}

SolutionDescription synthesize(const OperationalSolution& sol, const RailcarCatalog& cat) {
    SolutionDescription desc;
    for (const RailcarLoad& load : sol.loads) {
        desc.add(cat.global_pattern_id(load.railcar_type, load.pattern_k));
    }
    return desc;
}

namespace {

bool is_submultiset(std::vector<double> part, std::vector<double> whole) {
    std::sort(part.begin(), part.end());
    std::sort(whole.begin(), whole.end());
    std::size_t i = 0;
    for (double w : whole) {
        if (i < part.size() && part[i] == w) ++i;
    }
    return i == part.size();
}

}  // namespace

Cost cost_of(const Instance& inst, const OperationalSolution& sol, const RailcarCatalog& cat) {
    const int L = cat.num_container_types();
    std::vector<int> rail_used(cat.num_railcar_types(), 0);
    std::vector<std::vector<double>> cont_used(L);
    Cost cost;
    for (const RailcarLoad& load : sol.loads) {
        if (load.railcar_type < 0 || load.railcar_type >= cat.num_railcar_types()) {
            throw ValidationError("load references unknown railcar type");
        }
        const auto& pats = cat.patterns[load.railcar_type];
        if (load.pattern_k < 0 || load.pattern_k >= static_cast<int>(pats.size())) {
            throw ValidationError("load references unknown pattern");
        }
        const LoadPattern& pat = pats[load.pattern_k];
        if (static_cast<int>(load.weights.size()) != L) {
            throw ValidationError("load weight lists do not match container classes");
        }
        for (int l = 0; l < L; ++l) {
            if (static_cast<int>(load.weights[l].size()) != pat.counts[l]) {
                throw ValidationError("load weights do not match its pattern counts");
            }
            for (double w : load.weights[l]) cont_used[l].push_back(w);
        }
        const FitResult fit = fit_railcar(cat.railcars[load.railcar_type], load.weights);
        if (!fit.feasible) {
            throw ValidationError("load violates railcar weight or slot constraints");
        }
        rail_used[load.railcar_type]++;
        cost.loaded_containers += std::accumulate(pat.counts.begin(), pat.counts.end(), 0);
        cost.used_platforms += fit.min_platforms;
        cost.used_railcars += 1;
    }
    for (int j = 0; j < cat.num_railcar_types(); ++j) {
        if (rail_used[j] > inst.railcar_counts[j]) {
            throw ValidationError("railcar usage exceeds availability for type " +
                                  std::to_string(j));
        }
    }
    for (int l = 0; l < L; ++l) {
        if (!inst.has_weights()) {
            if (static_cast<int>(cont_used[l].size()) > inst.container_counts[l]) {
                throw ValidationError("container usage exceeds availability");
            }
        } else if (!is_submultiset(cont_used[l], inst.weights[l])) {
            throw ValidationError("assigned weights are not a submultiset of the instance");
        }
    }
    return cost;
}

Cost cost_of(const Instance& inst, const SolutionDescription& desc, const RailcarCatalog& cat) {
    const std::vector<int> rail = desc.railcar_usage(cat);
    for (std::size_t j = 0; j < rail.size(); ++j) {
        if (rail[j] > inst.railcar_counts[j]) {
            throw ValidationError("railcar usage exceeds availability for type " +
                                  std::to_string(j));
        }
    }
    const std::vector<int> cont = desc.container_usage(cat);
    for (std::size_t l = 0; l < cont.size(); ++l) {
        if (cont[l] > inst.container_counts[l]) {
            throw ValidationError("container usage exceeds availability for class " +
                                  std::to_string(l));
        }
    }
    return Cost{desc.total_containers(cat), desc.total_slots(cat), desc.total_loadings()};
}

}  // namespace loadcast
