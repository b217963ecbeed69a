#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "codband/environment.hpp"
#include "codband/policies.hpp"

namespace codband {

/// Cumulative pseudo-regret of one policy run: per-round gap between the
/// best candidate's expected reward and the chosen candidate's.
struct RegretCurve {
  std::string policy;
  std::uint64_t seed = 0;
  std::vector<double> instantaneous;
  std::vector<double> cumulative;

  void record(double inst);
  double final_cumulative() const {
    return cumulative.empty() ? 0.0 : cumulative.back();
  }
};

/// Appends the decision's pseudo-regret to the curve; returns it.
double record_regret(RegretCurve& curve, const RoundOutcome& outcome,
                     const Decision& decision);

/// One logged interaction for offline replay.
struct EventLogRecord {
  long round = 0;
  int user = 0;
  int logged_arm = 0;
  double reward = 0.0;
  std::vector<Context> candidates;
};

class LogParseError : public std::runtime_error {
 public:
  LogParseError(long line, const std::string& what);
  long line() const { return line_; }

 private:
  long line_;
};

/// Event log file format: a header line "d=<dim> candidates=<m>", then one
/// record per line as "round user logged_arm reward" followed by the m*d
/// candidate features flattened row-major, all space-separated decimal text
/// that round-trips to the exact binary values.
class EventLogWriter {
 public:
  EventLogWriter(std::ostream& out, int dim, int n_candidates);
  void write(const EventLogRecord& record);

 private:
  std::ostream& out_;
  int dim_;
  int n_candidates_;
};

class EventLogReader {
 public:
  explicit EventLogReader(std::istream& in);
  int dim() const { return dim_; }
  int n_candidates() const { return n_candidates_; }

  /// Reads the next record. Returns false at end of stream; malformed lines
  /// raise LogParseError with the 1-based line number.
  bool next(EventLogRecord& record);

 private:
  std::istream& in_;
  int dim_ = 0;
  int n_candidates_ = 0;
  long line_ = 1;
};

std::vector<EventLogRecord> read_event_log(const std::string& path);

/// Outcome of streaming a log through one policy.
struct ReplayResult {
  long total_events = 0;
  long matched = 0;
  double reward_sum = 0.0;
  std::vector<double> cumulative_reward;  // one entry per log record

  double reward_rate() const {
    return matched > 0 ? reward_sum / static_cast<double>(matched) : 0.0;
  }
};

/// Unbiased offline replay: the policy sees each record's candidates; only
/// when its choice equals the logged arm is the reward revealed (feedback)
/// and counted. Skipped records leave the policy untouched.
ReplayResult replay(Policy& policy, EventLogReader& reader, Rng& rng);

/// Elementwise ratio of cumulative rewards, NaN while the random baseline's
/// cumulative reward is still zero.
std::vector<double> normalized_reward(const std::vector<double>& policy_cum,
                                      const std::vector<double>& random_cum);

}  // namespace codband
