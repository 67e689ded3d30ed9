#include "icpi/runlog.hpp"

#include <algorithm>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace icpi {

double normalized_regret(double episode_return_discounted,
                         double start_state_optimal) {
  if (start_state_optimal == 0.0) return 0.0;
  double regret =
      (start_state_optimal - episode_return_discounted) / start_state_optimal;
  return std::clamp(regret, 0.0, 1.0);
}

void save_runlog_csv(const RunLog& log, std::ostream& out) {
  out << "# domain=" << log.domain << " algorithm=" << log.algorithm
      << " seed=" << log.seed;
  if (log.aborted) out << " aborted=" << log.abort_reason;
  out << "\n";
  out << "episode,steps,undiscounted_return,discounted_return,optimal_value,"
         "normalized_regret,wall_clock_s,tokens_used\n";
  out << std::setprecision(17);
  for (const auto& e : log.episodes) {
    out << e.episode << ',' << e.steps << ',' << e.undiscounted_return << ','
        << e.discounted_return << ',' << e.optimal_value << ','
        << e.normalized_regret << ',' << e.wall_clock_s << ','
        << e.tokens_used << '\n';
  }
}

RunLog load_runlog_csv(std::istream& in) {
  RunLog log;
  std::string line;
  if (!std::getline(in, line) || line.rfind("# domain=", 0) != 0) {
    throw std::runtime_error("missing runlog header");
  }
  {
    std::istringstream header(line.substr(2));
    std::string field;
    while (header >> field) {
      auto eq = field.find('=');
      if (eq == std::string::npos) continue;
      std::string key = field.substr(0, eq);
      std::string value = field.substr(eq + 1);
      if (key == "domain") log.domain = value;
      if (key == "algorithm") log.algorithm = value;
      if (key == "seed") log.seed = std::stoull(value);
      if (key == "aborted") {
        log.aborted = true;
        log.abort_reason = value;
      }
    }
  }
  std::getline(in, line);  // column header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    EpisodeRecord e;
    char comma;
    fields >> e.episode >> comma >> e.steps >> comma >> e.undiscounted_return >>
        comma >> e.discounted_return >> comma >> e.optimal_value >> comma >>
        e.normalized_regret >> comma >> e.wall_clock_s >> comma >>
        e.tokens_used;
    if (fields.fail()) throw std::runtime_error("malformed runlog row: " + line);
    log.episodes.push_back(e);
  }
  return log;
}

}  // namespace icpi
