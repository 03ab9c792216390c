#include <algorithm>

#include "quadstab/sim.hpp"

namespace quadstab {

const char* to_string(DeliveryPolicy p) {
  switch (p) {
    case DeliveryPolicy::random: return "random";
    case DeliveryPolicy::lifo: return "lifo";
    case DeliveryPolicy::oldest_last: return "oldest-last";
  }
  return "?";
}

DeliveryPolicy parse_policy(std::string_view s) {
  if (s == "random") return DeliveryPolicy::random;
  if (s == "lifo") return DeliveryPolicy::lifo;
  if (s == "oldest-last" || s == "oldest_last") return DeliveryPolicy::oldest_last;
  throw SimError("unknown delivery policy '" + std::string(s) + "'");
}

const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::timeout: return "TIMEOUT";
    case EventKind::deliver: return "DELIVER";
    case EventKind::search_start: return "SEARCH_START";
    case EventKind::search_end: return "SEARCH_END";
  }
  return "?";
}

std::string trace_line(const TraceEvent& e) {
  std::string s;
  s.reserve(96);
  s += "{\"step\":";
  s += std::to_string(e.step);
  s += ",\"round\":";
  s += std::to_string(e.round);
  s += ",\"kind\":\"";
  s += to_string(e.kind);
  s += "\",\"node\":";
  s += std::to_string(e.node);
  s += ",\"msg\":\"";
  s += e.message;
  s += "\",\"pending\":";
  s += std::to_string(e.pending);
  s += '}';
  return s;
}

std::vector<SearchKey> make_search_pool(const SystemState& s, std::uint64_t seed, std::size_t size) {
  std::vector<SearchKey> pool;
  if (s.size() == 0) return pool;
  Rng rng(seed ^ 0x5eedf00dcafebabeull);
  const auto& g = s.geometry;
  const std::uint64_t half = std::uint64_t{1} << (g.bits() - 1);
  for (std::size_t k = 0; k < size; ++k) {
    const Coord initiator = s.nodes[rng.below(s.size())].self;
    Coord target;
    if (k % 2 == 0) {
      target = s.nodes[rng.below(s.size())].self;
    } else {
      std::array<std::uint64_t, kMaxDim> axes{};
      for (int i = 0; i < g.dim(); ++i) axes[static_cast<std::size_t>(i)] = (rng.below(half) << 1) | 1u;
      target = Coord(g.bits(), std::span<const std::uint64_t>(axes.data(), static_cast<std::size_t>(g.dim())));
    }
    pool.push_back({initiator, target});
  }
  return pool;
}

Simulator::Simulator(SystemState initial, ScheduleConfig cfg)
    : state_(std::move(initial)), cfg_(cfg), rng_(cfg.seed) {
  if (cfg_.delta < 1) throw SimError("delta must be >= 1");
  if (cfg_.searches_per_round < 0) throw SimError("searches_per_round must be >= 0");
  pool_ = make_search_pool(state_, cfg_.seed);
}

int Simulator::max_rounds() const {
  return cfg_.max_rounds > 0 ? cfg_.max_rounds : 200 * static_cast<int>(state_.size());
}

std::size_t Simulator::initial_pending() const {
  std::size_t total = 0;
  for (const auto& box : state_.mailboxes) {
    for (const auto& pm : box) {
      if (pm.initial_root && *pm.initial_root == pm.id) ++total;
    }
  }
  return total;
}

std::size_t Simulator::initial_lineage_pending() const {
  std::size_t total = 0;
  for (const auto& box : state_.mailboxes) {
    for (const auto& pm : box) {
      if (pm.initial_root) ++total;
    }
  }
  return total;
}

std::string Simulator::summary(const Message& m) const {
  auto idx = [this](const Coord& c) { return std::to_string(state_.index_of(c)); };
  return std::visit(
      [&](const auto& msg) -> std::string {
        using T = std::decay_t<decltype(msg)>;
        if constexpr (std::is_same_v<T, Linearize>) {
          return "LINEARIZE(" + idx(msg.w) + ")";
        } else if constexpr (std::is_same_v<T, QLinearize>) {
          return "QLINEARIZE(" + idx(msg.w) + "," + (msg.area ? msg.area->path() : "-") + ")";
        } else if constexpr (std::is_same_v<T, Search>) {
          return "SEARCH(" + std::to_string(msg.request_id) + "," + idx(msg.initiator) + "," +
                 std::to_string(msg.hops) + ")";
        } else {
          return "SEARCHRESULT(" + std::to_string(msg.request_id) + "," + idx(msg.result) + ")";
        }
      },
      m);
}

void Simulator::emit(TraceEvent& ev) {
  ev.round = state_.round_counter;
  ev.pending = state_.pending();
  const std::string line = trace_line(ev);
  for (unsigned char ch : line) {
    hash_ ^= ch;
    hash_ *= 1099511628211ull;
  }
  hash_ ^= static_cast<unsigned char>('\n');
  hash_ *= 1099511628211ull;
  if (keep_trace_) lines_.push_back(line);
  for (auto* o : observers_) o->on_event(state_, ev);
}

void Simulator::begin_round() {
  const int round = ++state_.round_counter;
  counts_.emplace_back();

  const auto n = state_.size();
  if (!pool_.empty()) {
    for (int k = 0; k < cfg_.searches_per_round; ++k) {
      const auto& key = pool_[rng_.below(pool_.size())];
      Search m{key.initiator, key.target, state_.next_request_id++, 0, {key.initiator}};
      TraceEvent ev{state_.step_counter, round, EventKind::search_start,
                    state_.index_of(key.initiator), summary(m), 0};
      state_.enqueue(key.initiator, std::move(m));
      emit(ev);
    }
  }

  plan_.clear();
  cursor_ = 0;
  for (std::size_t i = 0; i < n; ++i) plan_.push_back({Slot::timeout, static_cast<int>(i), 0});
  std::size_t at_start = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& pm : state_.mailboxes[i]) {
      ++at_start;
      if (pm.enqueue_round + cfg_.delta <= round) {
        plan_.push_back({Slot::forced, static_cast<int>(i), pm.id});
      }
    }
  }
  if (cfg_.policy != DeliveryPolicy::oldest_last) {
    for (std::size_t k = 0; k < at_start; ++k) plan_.push_back({Slot::optional, -1, 0});
  }
  rng_.shuffle(plan_);
  in_round_ = true;
}

void Simulator::end_round() {
  const int round = state_.round_counter;
  for (std::size_t i = 0; i < state_.size(); ++i) {
    for (const auto& pm : state_.mailboxes[i]) {
      if (pm.enqueue_round + cfg_.delta <= round) {
        throw std::logic_error("fair receipt violated: message " + std::to_string(pm.id) +
                               " enqueued in round " + std::to_string(pm.enqueue_round) +
                               " still pending after round " + std::to_string(round));
      }
    }
  }
  in_round_ = false;
  for (auto* o : observers_) o->on_round_end(state_);
}

void Simulator::apply(int node, Effects fx, const std::optional<PendingMessage>& cause) {
  state_.nodes[static_cast<std::size_t>(node)] = std::move(fx.state);
  const bool from_initial = cause && cause->initial_root.has_value();
  for (auto& env : fx.outbound) {
    std::optional<std::uint64_t> root;
    int hops = 0;
    if (from_initial && env.message == cause->message) {
      root = cause->initial_root;
      hops = cause->verbatim_hops + 1;
      max_initial_chain_ = std::max(max_initial_chain_, hops);
    }
    state_.enqueue(env.to, std::move(env.message), root, hops);
  }
  if (fx.terminal) {
    TraceEvent ev{state_.step_counter, 0, EventKind::search_end, node,
                  "RESULT(" + std::to_string(fx.terminal->request_id) + "," +
                      std::to_string(state_.index_of(fx.terminal->result)) + "," +
                      std::to_string(fx.terminal->hops) + ")",
                  0};
    emit(ev);
    for (auto* o : observers_) o->on_search_end(state_, *fx.terminal);
  }
  for (auto* o : observers_) o->on_action(state_, node);
}

void Simulator::deliver(int node, std::size_t slot, TraceEvent& ev) {
  auto& box = state_.mailboxes[static_cast<std::size_t>(node)];
  PendingMessage pm = std::move(box[slot]);
  box.erase(box.begin() + static_cast<std::ptrdiff_t>(slot));

  ++state_.step_counter;
  counts_.back().delivered[static_cast<std::size_t>(kind_of(pm.message))]++;
  if (pm.initial_root && pm.verbatim_hops == 0) last_initial_round_ = state_.round_counter;

  ev = TraceEvent{state_.step_counter, 0, EventKind::deliver, node, summary(pm.message), 0};
  emit(ev);
  Effects fx = handle_message(state_.geometry, state_.nodes[static_cast<std::size_t>(node)], pm.message);
  apply(node, std::move(fx), pm);
}

bool Simulator::step_in_round(TraceEvent& out) {
  while (cursor_ < plan_.size()) {
    const Slot slot = plan_[cursor_++];
    switch (slot.type) {
      case Slot::timeout: {
        ++state_.step_counter;
        counts_.back().timeouts++;
        out = TraceEvent{state_.step_counter, 0, EventKind::timeout, slot.node, "", 0};
        emit(out);
        Effects fx = handle_timeout(state_.geometry, state_.nodes[static_cast<std::size_t>(slot.node)]);
        apply(slot.node, std::move(fx), std::nullopt);
        return true;
      }
      case Slot::forced: {
        const auto& box = state_.mailboxes[static_cast<std::size_t>(slot.node)];
        auto it = std::find_if(box.begin(), box.end(),
                               [&](const PendingMessage& pm) { return pm.id == slot.message_id; });
        if (it == box.end()) continue;  // already delivered by an optional slot
        deliver(slot.node, static_cast<std::size_t>(it - box.begin()), out);
        return true;
      }
      case Slot::optional: {
        const std::size_t total = state_.pending();
        if (total == 0) continue;
        int node = -1;
        std::size_t index = 0;
        if (cfg_.policy == DeliveryPolicy::random) {
          std::size_t pick = rng_.below(total);
          for (std::size_t i = 0; i < state_.size(); ++i) {
            const auto sz = state_.mailboxes[i].size();
            if (pick < sz) {
              node = static_cast<int>(i);
              index = pick;
              break;
            }
            pick -= sz;
          }
        } else {
          std::uint64_t newest = 0;
          for (std::size_t i = 0; i < state_.size(); ++i) {
            const auto& box = state_.mailboxes[i];
            for (std::size_t j = 0; j < box.size(); ++j) {
              if (node < 0 || box[j].id > newest) {
                newest = box[j].id;
                node = static_cast<int>(i);
                index = j;
              }
            }
          }
        }
        deliver(node, index, out);
        return true;
      }
    }
  }
  return false;
}

TraceEvent Simulator::step() {
  TraceEvent ev;
  if (!in_round_) begin_round();
  while (!step_in_round(ev)) {
    end_round();
    begin_round();
  }
  return ev;
}

void Simulator::run_round() {
  if (!in_round_) begin_round();
  TraceEvent ev;
  while (step_in_round(ev)) {
  }
  end_round();
}

RunOutcome Simulator::run_until(const std::function<bool(const SystemState&)>& stop) {
  if (!in_round_ && stop(state_)) return {true, state_.round_counter};
  const int limit = max_rounds();
  while (state_.round_counter < limit) {
    run_round();
    if (stop(state_)) return {true, state_.round_counter};
  }
  return {false, state_.round_counter};
}

}  // namespace quadstab
