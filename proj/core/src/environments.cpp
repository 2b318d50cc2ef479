#include "rlvc/environments.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "rlvc/rlvc.hpp"

namespace rlvc {

InteractionDatabase collect_interactions(const VisualTask& task, const CollectOptions& options) {
    InteractionDatabase db;
    db.num_actions = task.num_actions();
    db.discount = task.discount();
    db.interactions.reserve(options.count);

    Rng rng(options.seed);
    std::uniform_int_distribution<ActionId> pick(0, task.num_actions() - 1);
    auto observe = [&](const TaskState& state) {
        Percept p = task.percept(state, rng);
        p.id = db.percepts.size();
        db.percepts.push_back(std::move(p));
        db.states.push_back(state);
        return db.percepts.back().id;
    };

    TaskState state = task.sample_start(rng);
    PerceptId current = observe(state);
    std::size_t length = 0;
    while (db.interactions.size() < options.count) {
        const ActionId a = pick(rng);
        const StepResult r = task.step(state, a, rng);
        ++length;
        if (r.terminal) {
            db.interactions.push_back({current, a, r.reward, current, true});
        } else {
            const PerceptId next = observe(r.next);
            db.interactions.push_back({current, a, r.reward, next, false});
            current = next;
            state = r.next;
        }
        const bool cut = options.max_episode_length > 0 && length >= options.max_episode_length;
        if ((r.terminal || cut) && db.interactions.size() < options.count) {
            state = task.sample_start(rng);
            current = observe(state);
            length = 0;
        }
    }
    return db;
}

Dataset prepare_dataset(const InteractionDatabase& db, const FeatureDictionary& dict) {
    Dataset data;
    data.percepts.reserve(db.percepts.size());
    for (const auto& p : db.percepts) data.percepts.push_back(symbolize(p, dict));
    data.interactions = db.interactions;
    data.num_actions = db.num_actions;
    data.discount = db.discount;
    return data;
}

void write_interactions_csv(std::ostream& out, std::span<const Interaction> interactions) {
    out << "s,action,reward,s_next,terminal\n";
    out.precision(17);
    for (const auto& i : interactions)
        out << i.s << ',' << i.a << ',' << i.reward << ',' << i.s_next << ',' << (i.terminal_next ? 1 : 0)
            << '\n';
}

std::vector<Interaction> read_interactions_csv(std::istream& in) {
    std::vector<Interaction> out;
    std::string line;
    if (!std::getline(in, line) || line.rfind("s,action", 0) != 0)
        throw std::runtime_error("interactions: missing header");
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream fields(line);
        Interaction i{};
        int terminal = 0;
        if (!(fields >> i.s >> i.a >> i.reward >> i.s_next >> terminal))
            throw std::runtime_error("interactions: bad record on line " + std::to_string(lineno));
        i.terminal_next = terminal != 0;
        out.push_back(i);
    }
    return out;
}

FeatureDictionary random_dictionary(std::size_t size, std::size_t dimension, double threshold,
                                    double separation, Rng& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Descriptor> entries;
    entries.reserve(size);
    auto far_enough = [&](const Descriptor& d) {
        for (const auto& e : entries) {
            double d2 = 0.0;
            for (std::size_t k = 0; k < dimension; ++k) d2 += (d.coords[k] - e.coords[k]) * (d.coords[k] - e.coords[k]);
            if (d2 <= separation * separation) return false;
        }
        return true;
    };
    std::size_t rejected = 0;
    while (entries.size() < size) {
        Descriptor d{std::vector<double>(dimension)};
        for (auto& c : d.coords) c = u(rng);
        if (far_enough(d)) {
            entries.push_back(std::move(d));
        } else if (++rejected > 1000 * size) {
            throw std::runtime_error("random_dictionary: cannot place prototypes that far apart");
        }
    }
    return FeatureDictionary(std::move(entries), threshold);
}

Descriptor jittered(const FeatureDictionary& dict, Symbol symbol, double max_norm, Rng& rng) {
    Descriptor d = dict.entry(symbol);
    if (max_norm <= 0.0) return d;
    // Per-axis bound keeps the Euclidean norm strictly below max_norm.
    const double bound = 0.999 * max_norm / std::sqrt(static_cast<double>(d.coords.size()));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (auto& c : d.coords) c += u(rng);
    return d;
}

std::vector<Point2> poisson_disk(double width, double height, double min_distance, Rng& rng,
                                 std::size_t attempts) {
    const double cell = min_distance / std::sqrt(2.0);
    const auto cols = static_cast<std::size_t>(std::ceil(width / cell));
    const auto rows = static_cast<std::size_t>(std::ceil(height / cell));
    std::vector<long> grid(cols * rows, -1);
    std::vector<Point2> points;
    std::vector<std::size_t> active;
    std::uniform_real_distribution<double> u(0.0, 1.0);

    auto cell_of = [&](const Point2& p) {
        const auto cx = std::min(cols - 1, static_cast<std::size_t>(p.x / cell));
        const auto cy = std::min(rows - 1, static_cast<std::size_t>(p.y / cell));
        return std::pair{cx, cy};
    };
    auto fits = [&](const Point2& p) {
        if (p.x < 0.0 || p.y < 0.0 || p.x >= width || p.y >= height) return false;
        const auto [cx, cy] = cell_of(p);
        const std::size_t x0 = cx >= 2 ? cx - 2 : 0, y0 = cy >= 2 ? cy - 2 : 0;
        for (std::size_t y = y0; y <= std::min(rows - 1, cy + 2); ++y)
            for (std::size_t x = x0; x <= std::min(cols - 1, cx + 2); ++x) {
                const long idx = grid[y * cols + x];
                if (idx < 0) continue;
                const auto& q = points[static_cast<std::size_t>(idx)];
                if (std::hypot(q.x - p.x, q.y - p.y) < min_distance) return false;
            }
        return true;
    };
    auto add = [&](const Point2& p) {
        const auto [cx, cy] = cell_of(p);
        grid[cy * cols + cx] = static_cast<long>(points.size());
        active.push_back(points.size());
        points.push_back(p);
    };

    add({u(rng) * width, u(rng) * height});
    while (!active.empty()) {
        std::uniform_int_distribution<std::size_t> pick(0, active.size() - 1);
        const std::size_t slot = pick(rng);
        const Point2 base = points[active[slot]];
        bool placed = false;
        for (std::size_t k = 0; k < attempts; ++k) {
            const double angle = 2.0 * M_PI * u(rng);
            const double radius = min_distance * (1.0 + u(rng));
            const Point2 p{base.x + radius * std::cos(angle), base.y + radius * std::sin(angle)};
            if (fits(p)) {
                add(p);
                placed = true;
                break;
            }
        }
        if (!placed) {
            active[slot] = active.back();
            active.pop_back();
        }
    }
    return points;
}

}  // namespace rlvc
