#pragma once

// Line-oriented workload files.
//
//   # comment
//   job <job_id>
//   source <rdd>:<partition> size=<s> tier=<memory|disk|none> [worker=<w>] [insert_at=<t>]
//   task <task_id> in=<rdd>:<p>[,<rdd>:<p>...] out=<rdd>:<p> out_size=<s> cost=<c>
//   end
//
// Block names inside a job belong to that job's namespace. Numbers are written
// in shortest round-trip form, so format(parse(format(x))) == format(x).

#include <charconv>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "lerc/dag.hpp"
#include "lerc/error.hpp"

namespace lerc {

struct JobLines {
  std::size_t job = 0;
  std::vector<std::size_t> sources;
  std::vector<std::size_t> tasks;
};

struct ParsedWorkload {
  std::vector<JobDag> jobs;
  std::vector<JobLines> lines;  // 1-based line numbers, parallel to jobs
};

namespace detail {

inline std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline bool is_name_char(char c) {
  return c > ' ' && c != ':' && c != ',' && c != '=' && c != '#';
}

inline bool valid_name(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!is_name_char(c)) return false;
  }
  return true;
}

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

[[noreturn]] inline void parse_fail(std::size_t line, const std::string& msg) {
  throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + msg);
}

inline double parse_double(std::string_view s, std::size_t line, std::string_view what) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    parse_fail(line, "bad number for " + std::string(what) + ": '" + std::string(s) + "'");
  }
  return v;
}

inline long long parse_int(std::string_view s, std::size_t line, std::string_view what) {
  long long v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    parse_fail(line, "bad integer for " + std::string(what) + ": '" + std::string(s) + "'");
  }
  return v;
}

inline BlockRef parse_block(std::string_view s, const std::string& job, std::size_t line) {
  auto colon = s.rfind(':');
  if (colon == std::string_view::npos) parse_fail(line, "block '" + std::string(s) + "' must be rdd:partition");
  auto rdd = s.substr(0, colon);
  if (!valid_name(rdd)) parse_fail(line, "bad rdd name in '" + std::string(s) + "'");
  auto part = parse_int(s.substr(colon + 1), line, "partition");
  if (part < 0 || part > 0xffffffffLL) parse_fail(line, "partition out of range in '" + std::string(s) + "'");
  return {job, std::string(rdd), static_cast<std::uint32_t>(part)};
}

inline std::string block_name(const BlockRef& ref) { return ref.rdd + ":" + std::to_string(ref.partition); }

}  // namespace detail

inline std::string format_workload(const std::vector<JobDag>& jobs) {
  std::ostringstream os;
  for (const auto& job : jobs) {
    os << "job " << job.job_id << "\n";
    for (const auto& s : job.sources) {
      os << "source " << detail::block_name(s.ref) << " size=" << detail::format_number(s.size)
         << " tier=" << to_string(s.tier);
      if (s.worker) os << " worker=" << *s.worker;
      if (s.insert_at) os << " insert_at=" << detail::format_number(*s.insert_at);
      os << "\n";
    }
    for (const auto& t : job.tasks) {
      os << "task " << t.task_id << " in=";
      for (std::size_t i = 0; i < t.inputs.size(); ++i) {
        if (i) os << ",";
        os << detail::block_name(t.inputs[i]);
      }
      os << " out=" << detail::block_name(t.output) << " out_size=" << detail::format_number(t.output_size)
         << " cost=" << detail::format_number(t.compute_cost) << "\n";
    }
    os << "end\n";
  }
  return os.str();
}

inline ParsedWorkload parse_workload(std::string_view text) {
  using namespace detail;
  ParsedWorkload out;
  JobDag* job = nullptr;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;

    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    auto tok = split_ws(line);
    if (tok.empty()) continue;

    if (tok[0] == "job") {
      if (job) parse_fail(line_no, "'job' inside job '" + job->job_id + "' (missing 'end')");
      if (tok.size() != 2 || !valid_name(tok[1])) parse_fail(line_no, "expected 'job <id>'");
      out.jobs.push_back({std::string(tok[1]), {}, {}});
      out.lines.push_back({line_no, {}, {}});
      job = &out.jobs.back();
    } else if (tok[0] == "end") {
      if (!job) parse_fail(line_no, "'end' without 'job'");
      if (tok.size() != 1) parse_fail(line_no, "unexpected tokens after 'end'");
      job = nullptr;
    } else if (tok[0] == "source") {
      if (!job) parse_fail(line_no, "'source' outside a job");
      if (tok.size() < 2) parse_fail(line_no, "expected 'source <rdd>:<partition> ...'");
      SourceBlock src;
      src.ref = parse_block(tok[1], job->job_id, line_no);
      bool has_size = false, has_tier = false;
      for (std::size_t i = 2; i < tok.size(); ++i) {
        auto eq = tok[i].find('=');
        if (eq == std::string_view::npos) parse_fail(line_no, "expected key=value, got '" + std::string(tok[i]) + "'");
        auto key = tok[i].substr(0, eq);
        auto val = tok[i].substr(eq + 1);
        if (key == "size") {
          src.size = parse_double(val, line_no, key);
          has_size = true;
        } else if (key == "tier") {
          auto tier = parse_tier(val);
          if (!tier) parse_fail(line_no, "unknown tier '" + std::string(val) + "'");
          src.tier = *tier;
          has_tier = true;
        } else if (key == "worker") {
          auto w = parse_int(val, line_no, key);
          if (w < 0 || w > 1'000'000) parse_fail(line_no, "worker out of range");
          src.worker = static_cast<int>(w);
        } else if (key == "insert_at") {
          src.insert_at = parse_double(val, line_no, key);
        } else {
          parse_fail(line_no, "unknown source field '" + std::string(key) + "'");
        }
      }
      if (!has_size) parse_fail(line_no, "source is missing size=");
      if (!has_tier) parse_fail(line_no, "source is missing tier=");
      job->sources.push_back(std::move(src));
      out.lines.back().sources.push_back(line_no);
    } else if (tok[0] == "task") {
      if (!job) parse_fail(line_no, "'task' outside a job");
      if (tok.size() < 2 || !valid_name(tok[1])) parse_fail(line_no, "expected 'task <id> ...'");
      TaskSpec task;
      task.task_id = std::string(tok[1]);
      bool has_in = false, has_out = false, has_size = false, has_cost = false;
      for (std::size_t i = 2; i < tok.size(); ++i) {
        auto eq = tok[i].find('=');
        if (eq == std::string_view::npos) parse_fail(line_no, "expected key=value, got '" + std::string(tok[i]) + "'");
        auto key = tok[i].substr(0, eq);
        auto val = tok[i].substr(eq + 1);
        if (key == "in") {
          std::size_t p = 0;
          while (p <= val.size()) {
            auto comma = val.find(',', p);
            auto item = val.substr(p, comma == std::string_view::npos ? std::string_view::npos : comma - p);
            task.inputs.push_back(parse_block(item, job->job_id, line_no));
            if (comma == std::string_view::npos) break;
            p = comma + 1;
          }
          has_in = true;
        } else if (key == "out") {
          task.output = parse_block(val, job->job_id, line_no);
          has_out = true;
        } else if (key == "out_size") {
          task.output_size = parse_double(val, line_no, key);
          has_size = true;
        } else if (key == "cost") {
          task.compute_cost = parse_double(val, line_no, key);
          has_cost = true;
        } else {
          parse_fail(line_no, "unknown task field '" + std::string(key) + "'");
        }
      }
      if (!has_in) parse_fail(line_no, "task is missing in=");
      if (!has_out) parse_fail(line_no, "task is missing out=");
      if (!has_size) parse_fail(line_no, "task is missing out_size=");
      if (!has_cost) parse_fail(line_no, "task is missing cost=");
      job->tasks.push_back(std::move(task));
      out.lines.back().tasks.push_back(line_no);
    } else {
      parse_fail(line_no, "unknown directive '" + std::string(tok[0]) + "'");
    }
  }
  if (job) parse_fail(line_no, "job '" + job->job_id + "' is missing 'end'");
  return out;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IOFailure, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IOFailure, "cannot write '" + path + "'");
  out << text;
  if (!out) throw Error(ErrorCode::IOFailure, "write to '" + path + "' failed");
}

inline ParsedWorkload read_workload_file(const std::string& path) { return parse_workload(read_text_file(path)); }

}  // namespace lerc
