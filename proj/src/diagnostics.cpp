#include "isgd/diagnostics.hpp"

#include <charconv>
#include <fstream>

namespace isgd {

void write_trace_csv(const std::string& path, const std::vector<TraceRecord>& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::InvalidInput, "cannot write trace file '" + path + "'");
  out << "update_index,metric,value\n";
  char buf[32];
  for (const auto& r : trace) {
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), r.value);
    out << r.update_index << ',' << r.metric_name << ',' << std::string_view(buf, ptr - buf)
        << '\n';
  }
  if (!out) throw Error(ErrorKind::InvalidInput, "write failed for '" + path + "'");
}

}  // namespace isgd
