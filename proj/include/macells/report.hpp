#pragma once

#include <cstdint>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace macells {

// Fixed 6-decimal rendering for every real number that reaches an output
// file, so identical runs diff byte-identical regardless of locale.
std::string format_fixed(double v);

// Line-oriented `key = value` document writer. Keys are dotted paths; values
// are scalars or comma-joined lists. Emission order is insertion order.
class KvWriter {
 public:
  void put(const std::string& key, const std::string& value);
  void put(const std::string& key, const char* value);
  void put(const std::string& key, long value);
  void put(const std::string& key, std::uint64_t value);
  void put(const std::string& key, int value);
  void put(const std::string& key, double value);  // format_fixed
  void put_list(const std::string& key, const std::vector<std::string>& items);

  std::string str() const { return out_.str(); }

 private:
  std::ostringstream out_;
};

// Provenance block embedded in every report: command, resolved
// configuration, inputs, and outputs. Re-running the same command line
// reproduces the same manifest and therefore the same bytes.
struct RunManifest {
  std::string command;
  std::string tool_version;
  std::vector<std::string> inputs;
  std::vector<std::pair<std::string, std::string>> parameters;
  std::vector<std::string> outputs;

  void write_to(KvWriter& kv) const;
  std::string to_text() const;
};

// Renders rows as a column-aligned text table; row 0 is the header.
std::string render_table(const std::vector<std::vector<std::string>>& rows);

// One CSV line with minimal quoting (fields containing comma/quote/newline
// get quoted, quotes doubled).
std::string csv_line(const std::vector<std::string>& fields);

}  // namespace macells
