#include "codband/evaluation.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace codband {

void RegretCurve::record(double inst) {
  if (inst < 0.0)
    throw std::invalid_argument("RegretCurve: negative instantaneous regret");
  instantaneous.push_back(inst);
  cumulative.push_back(final_cumulative() + inst);
}

double record_regret(RegretCurve& curve, const RoundOutcome& outcome,
                     const Decision& decision) {
  if (decision.arm_index < 0 || decision.arm_index >= outcome.expected.size())
    throw std::invalid_argument("record_regret: arm index out of range");
  const double inst = outcome.best_expected - outcome.expected[decision.arm_index];
  curve.record(inst);
  return inst;
}

LogParseError::LogParseError(long line, const std::string& what)
    : std::runtime_error("event log line " + std::to_string(line) + ": " + what),
      line_(line) {}

EventLogWriter::EventLogWriter(std::ostream& out, int dim, int n_candidates)
    : out_(out), dim_(dim), n_candidates_(n_candidates) {
  if (dim < 1 || n_candidates < 1)
    throw std::invalid_argument("EventLogWriter: bad header values");
  out_ << "d=" << dim_ << " candidates=" << n_candidates_ << '\n';
}

void EventLogWriter::write(const EventLogRecord& record) {
  if (static_cast<int>(record.candidates.size()) != n_candidates_)
    throw std::invalid_argument("EventLogWriter: candidate count mismatch");
  if (record.logged_arm < 0 || record.logged_arm >= n_candidates_)
    throw std::invalid_argument("EventLogWriter: logged arm out of range");
  char buf[64];
  out_ << record.round << ' ' << record.user << ' ' << record.logged_arm;
  std::snprintf(buf, sizeof(buf), "%.17g", record.reward);
  out_ << ' ' << buf;
  for (const Context& x : record.candidates) {
    if (x.size() != dim_)
      throw std::invalid_argument("EventLogWriter: candidate dim mismatch");
    for (int i = 0; i < dim_; ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", x[i]);
      out_ << ' ' << buf;
    }
  }
  out_ << '\n';
}

EventLogReader::EventLogReader(std::istream& in) : in_(in) {
  std::string header;
  if (!std::getline(in_, header))
    throw LogParseError(1, "missing header line");
  if (std::sscanf(header.c_str(), "d=%d candidates=%d", &dim_,
                  &n_candidates_) != 2 ||
      dim_ < 1 || n_candidates_ < 1)
    throw LogParseError(1, "expected header 'd=<dim> candidates=<count>'");
}

bool EventLogReader::next(EventLogRecord& record) {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_;
    if (line.empty()) continue;
    std::istringstream ss(line);
    if (!(ss >> record.round >> record.user >> record.logged_arm >>
          record.reward))
      throw LogParseError(line_, "malformed record prefix");
    if (record.logged_arm < 0 || record.logged_arm >= n_candidates_)
      throw LogParseError(line_, "logged arm out of range");
    record.candidates.assign(n_candidates_, Context(dim_));
    for (int c = 0; c < n_candidates_; ++c)
      for (int i = 0; i < dim_; ++i)
        if (!(ss >> record.candidates[c][i]))
          throw LogParseError(line_, "truncated candidate features");
    std::string trailing;
    if (ss >> trailing)
      throw LogParseError(line_, "unexpected trailing fields");
    return true;
  }
  return false;
}

std::vector<EventLogRecord> read_event_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open event log: " + path);
  EventLogReader reader(in);
  std::vector<EventLogRecord> records;
  EventLogRecord record;
  while (reader.next(record)) records.push_back(record);
  return records;
}

ReplayResult replay(Policy& policy, EventLogReader& reader, Rng& rng) {
  if (policy.requires_ground_truth())
    throw std::invalid_argument(
        "replay: policy requires ground truth, unavailable in logged data");
  ReplayResult result;
  EventLogRecord record;
  while (reader.next(record)) {
    ++result.total_events;
    const Decision decision = policy.choose(record.user, record.candidates, rng);
    if (decision.arm_index == record.logged_arm) {
      ++result.matched;
      result.reward_sum += record.reward;
      policy.feedback(record.user, record.candidates[decision.arm_index],
                      record.reward, rng);
    }
    result.cumulative_reward.push_back(result.reward_sum);
  }
  return result;
}

std::vector<double> normalized_reward(const std::vector<double>& policy_cum,
                                      const std::vector<double>& random_cum) {
  if (policy_cum.size() != random_cum.size())
    throw std::invalid_argument("normalized_reward: curve length mismatch");
  std::vector<double> out(policy_cum.size());
  for (std::size_t i = 0; i < policy_cum.size(); ++i)
    out[i] = random_cum[i] > 0.0
                 ? policy_cum[i] / random_cum[i]
                 : std::numeric_limits<double>::quiet_NaN();
  return out;
}

}  // namespace codband
