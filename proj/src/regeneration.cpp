#include "rbb/regeneration.hpp"

#include "rbb/errors.hpp"

#include <ostream>

namespace rbb {

namespace {

void require_blocks(std::size_t have, std::size_t need, const char* what) {
    if (have < need) {
        throw Error(ErrorKind::InsufficientRegeneration,
                    std::string(what) + " needs at least " + std::to_string(need) +
                        " block(s), have " + std::to_string(have));
    }
}

}  // namespace

BlockCollection::BlockCollection(std::shared_ptr<const std::vector<State>> states,
                                 std::vector<Block> blocks, Block head, Block tail)
    : states_(std::move(states)), blocks_(std::move(blocks)), head_(head), tail_(tail) {
    for (const Block& b : blocks_) interior_length_ += b.length;
}

std::span<const State> BlockCollection::states_of(const Block& b) const {
    if (b.length == 0) return {};
    return std::span<const State>(*states_).subspan(b.start - 1, b.length);
}

std::span<const State> BlockCollection::interior_states() const {
    if (blocks_.empty()) return {};
    return std::span<const State>(*states_).subspan(blocks_.front().start - 1, interior_length_);
}

BlockSums block_sums(const BlockCollection& bc, const StateFunction& f) {
    BlockSums out;
    out.sums.reserve(bc.size());
    out.lengths.reserve(bc.size());
    for (const Block& b : bc.blocks()) {
        double s = 0.0;
        for (State x : bc.states_of(b)) s += f(x);
        out.sums.push_back(s);
        out.lengths.push_back(b.length);
    }
    out.total_length = bc.interior_length();
    return out;
}

RegenerationSchedule find_regenerations(const Trajectory& traj, const StateSet& atom) {
    RegenerationSchedule sched;
    const std::size_t total = traj.n() + 1;
    for (std::size_t i = 1; i <= total; ++i) {
        if (atom.contains(traj.at(i))) sched.times.push_back(i);
    }
    return sched;
}

BlockCollection decompose_blocks(const Trajectory& traj, const RegenerationSchedule& sched) {
    require_blocks(sched.count(), 2, "decompose_blocks (regenerations)");
    const std::size_t total = traj.n() + 1;
    std::vector<Block> blocks;
    blocks.reserve(sched.count() - 1);
    for (std::size_t j = 0; j + 1 < sched.count(); ++j) {
        const std::size_t a = sched.times[j];
        const std::size_t b = sched.times[j + 1];
        if (b <= a || b > total) {
            throw Error(ErrorKind::InvalidParameter,
                        "regeneration times must increase within the trajectory");
        }
        blocks.push_back(Block{a + 1, b - a});
    }
    const Block head{1, sched.times.front()};
    const std::size_t last = sched.times.back();
    const Block tail{last + 1, total - last};
    return BlockCollection(traj.states, std::move(blocks), head, tail);
}

std::size_t occupation_count(const BlockCollection& bc, const StateSet& target) {
    require_blocks(bc.size(), 1, "occupation_estimate");
    std::size_t hits = 0;
    for (State x : bc.interior_states()) hits += target.contains(x) ? 1 : 0;
    return hits;
}

double occupation_estimate(const BlockCollection& bc, const StateSet& target) {
    return static_cast<double>(occupation_count(bc, target)) /
           static_cast<double>(bc.interior_length());
}

double regen_mean(const BlockSums& sums) {
    require_blocks(sums.size(), 1, "regen_mean");
    double total = 0.0;
    for (double s : sums.sums) total += s;
    return total / static_cast<double>(sums.total_length);
}

double regen_mean(const BlockCollection& bc, const StateFunction& f) {
    require_blocks(bc.size(), 1, "regen_mean");
    return regen_mean(block_sums(bc, f));
}

double regen_variance(const BlockSums& sums) {
    require_blocks(sums.size(), 2, "regen_variance");
    const double mu = regen_mean(sums);
    double ss = 0.0;
    for (std::size_t j = 0; j < sums.size(); ++j) {
        const double d = sums.sums[j] - mu * static_cast<double>(sums.lengths[j]);
        ss += d * d;
    }
    return ss / static_cast<double>(sums.total_length);
}

double regen_variance(const BlockCollection& bc, const StateFunction& f) {
    require_blocks(bc.size(), 2, "regen_variance");
    return regen_variance(block_sums(bc, f));
}

void write_blocks_csv(std::ostream& os, const BlockCollection& bc, const StateFunction& f) {
    os << "block_index,start_time,length,f_sum\n";
    const BlockSums sums = block_sums(bc, f);
    for (std::size_t j = 0; j < bc.size(); ++j) {
        os << (j + 1) << ',' << bc.blocks()[j].start << ',' << bc.blocks()[j].length << ','
           << sums.sums[j] << '\n';
    }
}

}  // namespace rbb
