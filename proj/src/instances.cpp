#include "loadcast/instances.hpp"

#include <numeric>
#include <string>

#include "loadcast/error.hpp"

namespace loadcast {

int Instance::total_railcars() const {
    return std::accumulate(railcar_counts.begin(), railcar_counts.end(), 0);
}

int Instance::total_containers() const {
    return std::accumulate(container_counts.begin(), container_counts.end(), 0);
}

int Instance::total_platforms(const RailcarCatalog& cat) const {
    int total = 0;
    for (std::size_t j = 0; j < railcar_counts.size(); ++j) {
        total += railcar_counts[j] * cat.platform_count(static_cast<int>(j));
    }
    return total;
}

SamplerSpec class_spec(DataClass cls) {
    switch (cls) {
        case DataClass::A: return SamplerSpec{1, 150, 1, 50, 0};
        case DataClass::B: return SamplerSpec{151, 300, 1, 50, 0};
        case DataClass::C: return SamplerSpec{1, 150, 51, 100, 0};
        case DataClass::D: return SamplerSpec{151, 300, 51, 100, 0};
    }
    throw ValidationError("unknown data class");
}

DataClass parse_class(const std::string& name) {
    if (name == "A") return DataClass::A;
    if (name == "B") return DataClass::B;
    if (name == "C") return DataClass::C;
    if (name == "D") return DataClass::D;
    throw ValidationError("unknown data class '" + name + "' (expected A, B, C or D)");
}

const char* class_name(DataClass cls) {
    switch (cls) {
        case DataClass::A: return "A";
        case DataClass::B: return "B";
        case DataClass::C: return "C";
        case DataClass::D: return "D";
    }
    return "?";
}

WeightModel WeightModel::defaults_for(const RailcarCatalog& cat) {
    WeightModel m;
    for (const ContainerType& c : cat.containers) {
        if (c.length_ft == 40) {
            m.tare.push_back(3.8);
            m.payload_lo.push_back(2.0);
            m.payload_hi.push_back(26.0);
        } else if (c.length_ft == 53) {
            m.tare.push_back(4.9);
            m.payload_lo.push_back(2.0);
            m.payload_hi.push_back(22.0);
        } else {
            m.tare.push_back(4.0);
            m.payload_lo.push_back(2.0);
            m.payload_hi.push_back(24.0);
        }
    }
    return m;
}

Instance sample_instance(const SamplerSpec& spec, const RailcarCatalog& cat, Rng& rng) {
    if (spec.container_lo < 0 || spec.container_hi > 999 || spec.container_lo > spec.container_hi) {
        throw ValidationError("container range outside the 0..999 syntax bound");
    }
    if (spec.platform_lo < 0 || spec.platform_lo > spec.platform_hi) {
        throw ValidationError("bad platform range");
    }
    const int J = cat.num_railcar_types();
    const int L = cat.num_container_types();

    Instance inst;
    inst.container_counts.assign(L, 0);
    const int total = rng.uniform_int(spec.container_lo, spec.container_hi);
    // Uniform weak composition of `total` into L parts: place L-1 bars among
    // total + L - 1 slots.
    if (L == 1) {
        inst.container_counts[0] = total;
    } else {
        std::vector<int> bars;
        const int slots = total + L - 1;
        while (static_cast<int>(bars.size()) < L - 1) {
            const int b = rng.uniform_int(0, slots - 1);
            bool dup = false;
            for (int prev : bars) dup = dup || (prev == b);
            if (!dup) bars.push_back(b);
        }
        std::sort(bars.begin(), bars.end());
        int prev = -1;
        for (int l = 0; l < L - 1; ++l) {
            inst.container_counts[l] = bars[l] - prev - 1;
            prev = bars[l];
        }
        inst.container_counts[L - 1] = slots - 1 - prev;
    }

    for (int attempt = 0;; ++attempt) {
        if (attempt >= 1000000) {
            throw ValidationError("platform range unreachable with this catalog");
        }
        const int target = rng.uniform_int(spec.platform_lo, spec.platform_hi);
        std::vector<int> counts(J, 0);
        int platforms = 0;
        int railcars = 0;
        bool ok = true;
        while (platforms < target) {
            const int j = rng.uniform_int(0, J - 1);
            platforms += cat.platform_count(j);
            ++railcars;
            ++counts[j];
            if (platforms > target || counts[j] > 99 ||
                (spec.max_railcars > 0 && railcars > spec.max_railcars)) {
                ok = false;
                break;
            }
        }
        if (ok) {
            inst.railcar_counts = std::move(counts);
            break;
        }
    }
    return inst;
}

void sample_weights(Instance& inst, const WeightModel& model, Rng& rng) {
    const int L = static_cast<int>(inst.container_counts.size());
    inst.weights.assign(L, {});
    for (int l = 0; l < L; ++l) {
        inst.weights[l].reserve(inst.container_counts[l]);
        for (int i = 0; i < inst.container_counts[l]; ++i) {
            inst.weights[l].push_back(model.tare[l] +
                                      rng.uniform_real(model.payload_lo[l], model.payload_hi[l]));
        }
    }
}

}  // namespace loadcast
