#include "macells/report.hpp"

#include <algorithm>
#include <cstdio>

#include "macells/ids.hpp"

namespace macells {

std::string format_fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  std::string s(buf);
  if (s == "-0.000000") s = "0.000000";  // normalize negative zero
  return s;
}

void KvWriter::put(const std::string& key, const std::string& value) {
  out_ << key << " = " << value << '\n';
}

void KvWriter::put(const std::string& key, const char* value) {
  put(key, std::string(value));
}

void KvWriter::put(const std::string& key, long value) {
  out_ << key << " = " << value << '\n';
}

void KvWriter::put(const std::string& key, std::uint64_t value) {
  out_ << key << " = " << value << '\n';
}

void KvWriter::put(const std::string& key, int value) {
  put(key, static_cast<long>(value));
}

void KvWriter::put(const std::string& key, double value) {
  put(key, format_fixed(value));
}

void KvWriter::put_list(const std::string& key,
                        const std::vector<std::string>& items) {
  put(key, join(items, ","));
}

void RunManifest::write_to(KvWriter& kv) const {
  kv.put("manifest.command", command);
  kv.put("manifest.tool_version", tool_version);
  for (std::size_t i = 0; i < inputs.size(); ++i)
    kv.put("manifest.input." + std::to_string(i), inputs[i]);
  for (const auto& [key, value] : parameters)
    kv.put("manifest.config." + key, value);
  for (std::size_t i = 0; i < outputs.size(); ++i)
    kv.put("manifest.output." + std::to_string(i), outputs[i]);
}

std::string RunManifest::to_text() const {
  std::ostringstream out;
  out << "run: " << command << " (tool " << tool_version << ")\n";
  if (!inputs.empty()) out << "inputs: " << join(inputs, ", ") << '\n';
  if (!parameters.empty()) {
    out << "config:";
    for (const auto& [key, value] : parameters)
      out << ' ' << key << '=' << value;
    out << '\n';
  }
  if (!outputs.empty()) out << "outputs: " << join(outputs, ", ") << '\n';
  return out.str();
}

std::string render_table(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> widths;
  for (const auto& row : rows) {
    if (row.size() > widths.size()) widths.resize(row.size(), 0);
    for (std::size_t c = 0; c < row.size(); ++c)
      widths[c] = std::max(widths[c], row[c].size());
  }
  std::ostringstream out;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::string line;
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      std::string cell = rows[r][c];
      if (c + 1 < rows[r].size()) cell.resize(widths[c] + 2, ' ');
      line += cell;
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out << line << '\n';
    if (r == 0) {
      std::size_t total = 0;
      for (std::size_t c = 0; c < widths.size(); ++c)
        total += widths[c] + (c + 1 < widths.size() ? 2 : 0);
      out << std::string(total, '-') << '\n';
    }
  }
  return out.str();
}

std::string csv_line(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) out += ',';
    const std::string& f = fields[i];
    if (f.find_first_of(",\"\n") != std::string::npos) {
      out += '"';
      for (char ch : f) {
        if (ch == '"') out += '"';
        out += ch;
      }
      out += '"';
    } else {
      out += f;
    }
  }
  return out;
}

}  // namespace macells
