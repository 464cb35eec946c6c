#ifndef LOADCAST_INSTANCES_HPP
#define LOADCAST_INSTANCES_HPP

#include <cstdint>
#include <vector>

#include "loadcast/catalog.hpp"
#include "loadcast/rng.hpp"

namespace loadcast {

// One LPP statement. railcar_counts/container_counts are the first-stage
// information; weights, when present, are the realized second stage.
struct Instance {
    std::vector<int> railcar_counts;               // size J, each in 0..99
    std::vector<int> container_counts;             // size L, each in 0..999
    std::vector<std::vector<double>> weights;      // per length class, tonnes

    bool has_weights() const { return !weights.empty(); }
    int total_railcars() const;
    int total_containers() const;
    int total_platforms(const RailcarCatalog& cat) const;
};

struct SamplerSpec {
    int container_lo = 1, container_hi = 150;
    int platform_lo = 1, platform_hi = 50;
    int max_railcars = 0;  // 0 = no explicit cap (the 0..99 syntax bound always holds)
};

enum class DataClass { A, B, C, D };

SamplerSpec class_spec(DataClass cls);
DataClass parse_class(const std::string& name);
const char* class_name(DataClass cls);

// Per-length-class weight law: tare plus a uniform payload.
struct WeightModel {
    std::vector<double> tare;        // size L
    std::vector<double> payload_lo;  // size L
    std::vector<double> payload_hi;  // size L

    double mean(int length_class) const {
        return tare[length_class] +
               0.5 * (payload_lo[length_class] + payload_hi[length_class]);
    }
    static WeightModel defaults_for(const RailcarCatalog& cat);
};

// First-stage sampling: total containers uniform in the configured range and
// split uniformly over length classes; railcar types drawn uniformly until the
// platform total hits a uniform target in the configured range, restarting the
// multiset whenever a draw overshoots.
Instance sample_instance(const SamplerSpec& spec, const RailcarCatalog& cat, Rng& rng);

// Second stage: i.i.d. weights for every container of the instance.
void sample_weights(Instance& inst, const WeightModel& model, Rng& rng);

}  // namespace loadcast

#endif
