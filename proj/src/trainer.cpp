#include "loadcast/trainer.hpp"

#include <cstdio>
#include <sstream>

namespace loadcast {

std::string history_text(const History& history) {
    std::string out;
    for (const EpochRecord& rec : history) {
        char buf[160];
        std::snprintf(buf, sizeof(buf), "epoch %d train_nll %.9e valid_nll %.9e seconds %.3f\n",
                      rec.epoch, rec.train_loss, rec.valid_loss, rec.seconds);
        out += buf;
    }
    return out;
}

History parse_history(const std::string& text) {
    History history;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        EpochRecord rec;
        if (std::sscanf(line.c_str(), "epoch %d train_nll %lf valid_nll %lf seconds %lf",
                        &rec.epoch, &rec.train_loss, &rec.valid_loss, &rec.seconds) == 4) {
            history.push_back(rec);
        }
    }
    return history;
}

}  // namespace loadcast
