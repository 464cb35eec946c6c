#include "loadcast/catalog.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "loadcast/error.hpp"

namespace loadcast {

int RailcarCatalog::pattern_type(int global_id) const {
    for (int j = 0; j < num_railcar_types(); ++j) {
        if (global_id < pattern_offset[j + 1]) return j;
    }
    throw ValidationError("pattern id out of range: " + std::to_string(global_id));
}

const LoadPattern& RailcarCatalog::pattern(int global_id) const {
    const int j = pattern_type(global_id);
    return patterns[j][global_id - pattern_offset[j]];
}

namespace {

// DFS over the fillings of one railcar's platforms, collecting the distinct
// aggregate count vectors together with the fewest platforms realizing each.
void fill_platforms(const RailcarType& rc, int L, std::size_t p, CountVec& counts,
                    int platforms_used, std::map<CountVec, int>& out) {
    if (p == rc.platforms.size()) {
        for (int c : counts) {
            if (c > 0) {
                auto [it, inserted] = out.emplace(counts, platforms_used);
                if (!inserted) it->second = std::min(it->second, platforms_used);
                break;
            }
        }
        return;
    }
    const PlatformSpec& plat = rc.platforms[p];
    fill_platforms(rc, L, p + 1, counts, platforms_used, out);  // leave empty
    for (int b : plat.allowed_bottom) {
        counts[b]++;
        fill_platforms(rc, L, p + 1, counts, platforms_used + 1, out);
        for (int t : plat.allowed_top) {
            counts[t]++;
            fill_platforms(rc, L, p + 1, counts, platforms_used + 1, out);
            counts[t]--;
        }
        counts[b]--;
    }
}

}  // namespace

std::vector<std::vector<LoadPattern>> enumerate_patterns(
    const std::vector<ContainerType>& containers,
    const std::vector<RailcarType>& railcars) {
    const int L = static_cast<int>(containers.size());
    std::vector<std::vector<LoadPattern>> result;
    result.reserve(railcars.size());
    for (const RailcarType& rc : railcars) {
        std::map<CountVec, int> found;  // ordered: gives the canonical sort
        CountVec counts(L, 0);
        fill_platforms(rc, L, 0, counts, 0, found);
        std::vector<LoadPattern> list;
        list.reserve(found.size());
        for (const auto& [vec, min_plat] : found) {
            list.push_back(LoadPattern{rc.index, vec, min_plat});
        }
        result.push_back(std::move(list));
    }
    return result;
}

RailcarCatalog make_catalog(std::vector<ContainerType> containers,
                            std::vector<RailcarType> railcars) {
    if (containers.empty()) throw ValidationError("catalog needs at least one container type");
    if (railcars.empty()) throw ValidationError("catalog needs at least one railcar type");
    for (std::size_t j = 0; j < railcars.size(); ++j) {
        if (railcars[j].index != static_cast<int>(j)) {
            throw ValidationError("railcar indices must be contiguous from 0, got " +
                                  std::to_string(railcars[j].index) + " at position " +
                                  std::to_string(j));
        }
    }
    RailcarCatalog cat;
    cat.containers = std::move(containers);
    cat.railcars = std::move(railcars);
    cat.patterns = enumerate_patterns(cat.containers, cat.railcars);
    cat.pattern_offset.assign(1, 0);
    for (const auto& list : cat.patterns) {
        cat.pattern_offset.push_back(cat.pattern_offset.back() + static_cast<int>(list.size()));
    }
    return cat;
}

namespace {

struct LineReader {
    std::istream& in;
    std::string name;
    int line_no = 0;

    bool next(std::vector<std::string>& words) {
        std::string line;
        while (std::getline(in, line)) {
            ++line_no;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            std::istringstream ss(line);
            words.clear();
            std::string w;
            while (ss >> w) words.push_back(w);
            if (!words.empty()) return true;
        }
        return false;
    }

    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError(name + ":" + std::to_string(line_no) + ": " + msg);
    }
};

int to_int(const LineReader& r, const std::string& w) {
    try {
        std::size_t pos = 0;
        const int v = std::stoi(w, &pos);
        if (pos != w.size()) throw std::invalid_argument(w);
        return v;
    } catch (const std::exception&) {
        r.fail("expected integer, got '" + w + "'");
    }
}

double to_double(const LineReader& r, const std::string& w) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(w, &pos);
        if (pos != w.size()) throw std::invalid_argument(w);
        return v;
    } catch (const std::exception&) {
        r.fail("expected number, got '" + w + "'");
    }
}

}  // namespace

RailcarCatalog parse_catalog(std::istream& in, const std::string& name) {
    LineReader reader{in, name};
    std::vector<std::string> words;

    if (!reader.next(words) || words[0] != "format_version") {
        reader.fail("expected 'format_version' on the first non-empty line");
    }
    if (words.size() != 2 || to_int(reader, words[1]) != 1) {
        reader.fail("unsupported catalog format_version");
    }

    std::vector<ContainerType> containers;
    std::vector<int> length_to_class;  // sparse map length_ft -> class index
    std::vector<RailcarType> railcars;

    auto class_of = [&](const std::string& w) {
        const int len = to_int(reader, w);
        for (std::size_t l = 0; l < containers.size(); ++l) {
            if (containers[l].length_ft == len) return static_cast<int>(l);
        }
        reader.fail("unknown container length '" + w + "'");
    };

    while (reader.next(words)) {
        if (words[0] == "container_lengths") {
            if (!containers.empty()) reader.fail("duplicate container_lengths line");
            for (std::size_t i = 1; i < words.size(); ++i) {
                const int len = to_int(reader, words[i]);
                for (const ContainerType& c : containers) {
                    if (c.length_ft == len) reader.fail("duplicate container length");
                }
                containers.push_back(ContainerType{len});
            }
            if (containers.empty()) reader.fail("container_lengths lists no lengths");
        } else if (words[0] == "railcar") {
            if (words.size() != 4 || words[2] != "weight_cap") {
                reader.fail("expected: railcar <index> weight_cap <tonnes>");
            }
            RailcarType rc;
            rc.index = to_int(reader, words[1]);
            rc.weight_cap = to_double(reader, words[3]);
            for (const RailcarType& prev : railcars) {
                if (prev.index == rc.index) {
                    reader.fail("duplicate railcar index " + std::to_string(rc.index));
                }
            }
            railcars.push_back(std::move(rc));
        } else if (words[0] == "platform") {
            if (railcars.empty()) reader.fail("platform line before any railcar");
            if (containers.empty()) reader.fail("platform line before container_lengths");
            PlatformSpec plat;
            std::size_t i = 1;
            if (i + 1 < words.size() && words[i] == "weight_cap") {
                plat.weight_cap = to_double(reader, words[i + 1]);
                i += 2;
            } else {
                reader.fail("expected: platform weight_cap <tonnes> bottom <lengths> [top <lengths>]");
            }
            if (i >= words.size() || words[i] != "bottom") reader.fail("platform needs a bottom list");
            ++i;
            while (i < words.size() && words[i] != "top") plat.allowed_bottom.push_back(class_of(words[i++]));
            if (i < words.size()) {  // words[i] == "top"
                ++i;
                while (i < words.size()) plat.allowed_top.push_back(class_of(words[i++]));
            }
            if (plat.allowed_bottom.empty()) reader.fail("platform bottom list is empty");
            railcars.back().platforms.push_back(std::move(plat));
        } else {
            reader.fail("unknown directive '" + words[0] + "'");
        }
    }

    for (const RailcarType& rc : railcars) {
        if (rc.platforms.empty()) {
            throw ValidationError(name + ": railcar " + std::to_string(rc.index) +
                                  " has no platforms");
        }
    }
    std::sort(railcars.begin(), railcars.end(),
              [](const RailcarType& a, const RailcarType& b) { return a.index < b.index; });
    return make_catalog(std::move(containers), std::move(railcars));
}

RailcarCatalog load_catalog(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open catalog file: " + path);
    return parse_catalog(in, path);
}

std::string canonical_text(const RailcarCatalog& cat) {
    std::ostringstream out;
    out << "format_version 1\n";
    out << "container_lengths";
    for (const ContainerType& c : cat.containers) out << ' ' << c.length_ft;
    out << '\n';
    for (const RailcarType& rc : cat.railcars) {
        out << "railcar " << rc.index << " weight_cap " << rc.weight_cap << '\n';
        for (const PlatformSpec& p : rc.platforms) {
            out << "platform weight_cap " << p.weight_cap << " bottom";
            for (int b : p.allowed_bottom) out << ' ' << cat.containers[b].length_ft;
            if (!p.allowed_top.empty()) {
                out << " top";
                for (int t : p.allowed_top) out << ' ' << cat.containers[t].length_ft;
            }
            out << '\n';
        }
    }
    return out.str();
}

std::uint64_t RailcarCatalog::hash() const {
    const std::string text = canonical_text(*this);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace loadcast
