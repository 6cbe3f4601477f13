#include "dynawarp/corpus.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <ctime>
#include <stdexcept>
#include <unordered_set>

namespace dynawarp {

namespace {

struct Template {
  std::string_view source;
  unsigned weight;
  std::string_view pattern;
};

// Placeholders are expanded by CorpusGenerator::expand.
constexpr std::array kTemplates{
    Template{"hdfs", 10, "{ymd6} {hms6} {pid} INFO dfs.DataNode$DataXceiver: Receiving block blk_{blk} src: /{ip}:{port} dest: /{ip}:50010"},
    Template{"hdfs", 10, "{ymd6} {hms6} {pid} INFO dfs.DataNode$PacketResponder: PacketResponder {small} for block blk_{blk} terminating"},
    Template{"hdfs", 8, "{ymd6} {hms6} {pid} INFO dfs.FSNamesystem: BLOCK* NameSystem.addStoredBlock: blockMap updated: {ip}:50010 is added to blk_{blk} size {size}"},
    Template{"hdfs", 8, "{ymd6} {hms6} {pid} INFO dfs.DataNode$PacketResponder: Received block blk_{blk} of size {size} from /{ip}"},
    Template{"hdfs", 4, "{ymd6} {hms6} {pid} INFO dfs.FSNamesystem: BLOCK* NameSystem.allocateBlock: /user/root/rand/_temporary/_task_{task}_m_{part}_0/part-{part}. blk_{blk}"},
    Template{"hdfs", 1, "{ymd6} {hms6} {pid} WARN dfs.DataNode$DataXceiver: {ip}:50010:Got exception while serving blk_{blk} to /{ip}:"},
    Template{"hdfs", 2, "{ymd6} {hms6} {pid} INFO dfs.DataBlockScanner: Verification succeeded for blk_{blk}"},
    Template{"sshd", 5, "{mon} {day} {hms} LabSZ sshd[{pid}]: Failed password for invalid user {user} from {ip} port {port} ssh2"},
    Template{"sshd", 4, "{mon} {day} {hms} LabSZ sshd[{pid}]: Invalid user {user} from {ip}"},
    Template{"sshd", 4, "{mon} {day} {hms} LabSZ sshd[{pid}]: pam_unix(sshd:auth): authentication failure; logname= uid=0 euid=0 tty=ssh ruser= rhost={ip}  user={user}"},
    Template{"sshd", 3, "{mon} {day} {hms} LabSZ sshd[{pid}]: Received disconnect from {ip}: 11: Bye Bye [preauth]"},
    Template{"sshd", 2, "{mon} {day} {hms} LabSZ sshd[{pid}]: Accepted password for {user} from {ip} port {port} ssh2"},
    Template{"sshd", 3, "{mon} {day} {hms} LabSZ sshd[{pid}]: Connection closed by {ip} [preauth]"},
    Template{"apache", 4, "[{dow} {mon} {day} {hms} 2005] [notice] jk2_init() Found child {pid} in scoreboard slot {small}"},
    Template{"apache", 3, "[{dow} {mon} {day} {hms} 2005] [error] mod_jk child workerEnv in error state {small}"},
    Template{"apache", 2, "[{dow} {mon} {day} {hms} 2005] [error] [client {ip}] Directory index forbidden by rule: /var/www/html/"},
    Template{"apache", 3, "[{dow} {mon} {day} {hms} 2005] [notice] workerEnv.init() ok /etc/httpd/conf/workers2.properties"},
    Template{"spark", 6, "{ymd2} {hms} INFO executor.Executor: Running task {small}.0 in stage {stage}.0 (TID {tid})"},
    Template{"spark", 5, "{ymd2} {hms} INFO storage.BlockManager: Found block rdd_{small}_{small} locally"},
    Template{"spark", 6, "{ymd2} {hms} INFO executor.Executor: Finished task {small}.0 in stage {stage}.0 (TID {tid}). {size} bytes result sent to driver"},
    Template{"spark", 2, "{ymd2} {hms} INFO storage.MemoryStore: Block broadcast_{small} stored as values in memory (estimated size {kb} KB, free {mb} MB)"},
    Template{"zookeeper", 4, "{ymd} {hms},{ms} - INFO  [NIOServerCxn.Factory:0.0.0.0/0.0.0.0:2181:NIOServerCnxnFactory@197] - Accepted socket connection from /{ip}:{port}"},
    Template{"zookeeper", 2, "{ymd} {hms},{ms} - WARN  [SendWorker:{small}:QuorumCnxManager$SendWorker@688] - Send worker leaving thread"},
    Template{"zookeeper", 3, "{ymd} {hms},{ms} - INFO  [CommitProcessor:{small}:ZooKeeperServer@595] - Established session 0x{hex} with negotiated timeout {timeout} for client /{ip}:{port}"},
    Template{"zookeeper", 3, "{ymd} {hms},{ms} - INFO  [NIOServerCxn.Factory:0.0.0.0/0.0.0.0:2181:NIOServerCnxn@1001] - Closed socket connection for client /{ip}:{port} which had sessionid 0x{hex}"},
    Template{"openstack", 3, "nova-compute.log.1.2017-05-16_13:55:31 {ymd} {hms}.{ms} {pid} INFO nova.compute.manager [req-{uuid} - - - - -] [instance: {uuid}] VM Started (Lifecycle Event)"},
    Template{"openstack", 3, "nova-api.log.1.2017-05-16_13:53:08 {ymd} {hms}.{ms} {pid} INFO nova.osapi_compute.wsgi.server [req-{uuid}] {ip} \"GET /v2/servers/detail HTTP/1.1\" status: 200 len: {size} time: 0.{ms}"},
    Template{"bgl", 4, "- {epoch} {node} RAS KERNEL INFO {small} double-hummer alignment exceptions"},
    Template{"bgl", 3, "- {epoch} {node} RAS KERNEL INFO instruction cache parity error corrected"},
    Template{"bgl", 1, "- {epoch} {node} RAS APP FATAL ciod: failed to read message prefix on control stream (CioStream socket to {ip}:{port}"},
    Template{"intl", 1, "{ymd} {hms} Benutzer {user} angemeldet – Sitzung geöffnet für {ip}"},
    Template{"intl", 1, "{ymd} {hms} ユーザー {user} がログインしました ({ip})"},
};

constexpr std::array<std::string_view, 12> kMonths{"Jan", "Feb", "Mar", "Apr", "May", "Jun",
                                                   "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};
constexpr std::array<std::string_view, 7> kDays{"Sun", "Mon", "Tue", "Wed", "Thu", "Fri", "Sat"};
constexpr std::array<std::string_view, 24> kUserStems{
    "admin", "root", "test", "oracle", "guest", "user", "ftp", "postgres", "ubuntu", "pi", "support", "git",
    "nagios", "mysql", "webmaster", "backup", "info", "deploy", "hadoop", "jenkins", "demo", "operator",
    "zabbix", "www"};

auto pad(std::uint64_t v, int width) -> std::string {
  std::string s = std::to_string(v);
  if (static_cast<int>(s.size()) < width) {
    s.insert(0, static_cast<std::size_t>(width) - s.size(), '0');
  }
  return s;
}

auto hex_string(std::uint64_t v, int digits) -> std::string {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string s(static_cast<std::size_t>(digits), '0');
  for (int i = digits - 1; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = kHex[v & 0xf];
    v >>= 4;
  }
  return s;
}

auto total_weight() -> unsigned {
  unsigned w = 0;
  for (const Template& t : kTemplates) {
    w += t.weight;
  }
  return w;
}

}  // namespace

CorpusGenerator::CorpusGenerator(std::uint64_t seed) : rng_(seed) {
  for (int i = 0; i < 600; ++i) {
    const std::uint64_t r = rng_();
    ips_.push_back(std::to_string(10 + (r & 0x7f)) + "." + std::to_string((r >> 8) & 0xff) + "." +
                   std::to_string((r >> 16) & 0xff) + "." + std::to_string((r >> 24) & 0xff));
  }
  for (int i = 0; i < 300; ++i) {
    const auto stem = kUserStems[rng_() % kUserStems.size()];
    users_.push_back(i < 24 ? std::string(kUserStems[static_cast<std::size_t>(i)])
                            : std::string(stem) + std::to_string(rng_() % 100));
  }
  for (int i = 0; i < 128; ++i) {
    const std::uint64_t r = rng_();
    nodes_.push_back("R" + pad(r % 64, 2) + "-M" + std::to_string((r >> 8) & 1) + "-N" +
                     std::to_string((r >> 9) % 16) + "-C:J" + pad((r >> 16) % 18, 2) + "-U" +
                     pad(1 + ((r >> 24) & 1), 2));
  }
}

auto CorpusGenerator::skewed(std::size_t pool) -> std::size_t {
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
  return std::min(pool - 1, static_cast<std::size_t>(static_cast<double>(pool) * u * u * u));
}

auto CorpusGenerator::ip() -> std::string { return ips_[skewed(ips_.size())]; }

auto CorpusGenerator::block() -> std::string {
  // Blocks are mentioned several times while they are live.
  if (recent_blocks_.size() < 64 || rng_() % 4 == 0) {
    const bool negative = rng_() % 2 == 0;
    std::string b = (negative ? "-" : "") + std::to_string(rng_() % 9'000'000'000'000'000'000ULL);
    if (recent_blocks_.size() < 64) {
      recent_blocks_.push_back(b);
    } else {
      recent_blocks_[rng_() % recent_blocks_.size()] = b;
    }
    return b;
  }
  return recent_blocks_[rng_() % recent_blocks_.size()];
}

auto CorpusGenerator::uuid() -> std::string {
  if (recent_uuids_.size() < 16 || rng_() % 6 == 0) {
    const std::uint64_t a = rng_();
    const std::uint64_t b = rng_();
    std::string u = hex_string(a >> 32, 8) + "-" + hex_string(a >> 16, 4) + "-" + hex_string(a, 4) + "-" +
                    hex_string(b >> 48, 4) + "-" + hex_string(b, 12);
    if (recent_uuids_.size() < 16) {
      recent_uuids_.push_back(u);
    } else {
      recent_uuids_[rng_() % recent_uuids_.size()] = u;
    }
    return u;
  }
  return recent_uuids_[rng_() % recent_uuids_.size()];
}

void CorpusGenerator::advance_clock() { clock_ms_ += rng_() % 40; }

void CorpusGenerator::expand(std::string_view pattern, std::string& out) {
  const std::time_t secs = static_cast<std::time_t>(clock_ms_ / 1000);
  std::tm tm{};
  gmtime_r(&secs, &tm);
  const auto hms = pad(static_cast<std::uint64_t>(tm.tm_hour), 2) + ":" +
                   pad(static_cast<std::uint64_t>(tm.tm_min), 2) + ":" + pad(static_cast<std::uint64_t>(tm.tm_sec), 2);
  std::size_t i = 0;
  while (i < pattern.size()) {
    if (pattern[i] != '{') {
      out.push_back(pattern[i++]);
      continue;
    }
    const std::size_t close = pattern.find('}', i);
    const std::string_view name = pattern.substr(i + 1, close - i - 1);
    i = close + 1;
    if (name == "ip") {
      out += ip();
    } else if (name == "port") {
      out += std::to_string(1024 + rng_() % 64000);
    } else if (name == "blk") {
      out += block();
    } else if (name == "pid") {
      out += std::to_string(100 + skewed(4000));
    } else if (name == "small") {
      out += std::to_string(skewed(40));
    } else if (name == "stage") {
      out += std::to_string((clock_ms_ / 60000) % 500);
    } else if (name == "size") {
      out += std::to_string(skewed(1 << 20) * 64);
    } else if (name == "kb") {
      out += std::to_string(skewed(100));
      out += "." + std::to_string(rng_() % 10);
    } else if (name == "mb") {
      out += std::to_string(300 + skewed(100));
      out += "." + std::to_string(rng_() % 10);
    } else if (name == "task") {
      out += "20081109" + pad(2000 + skewed(40), 4);
      out += "_" + pad(skewed(10), 4);
    } else if (name == "part") {
      out += pad(skewed(2000), 5);
    } else if (name == "tid") {
      out += std::to_string(tid_++);
    } else if (name == "user") {
      out += users_[skewed(users_.size())];
    } else if (name == "node") {
      out += nodes_[skewed(nodes_.size())];
    } else if (name == "hex") {
      out += "15" + hex_string(0x0ca4000000ULL + skewed(4096), 12);
    } else if (name == "uuid") {
      out += uuid();
    } else if (name == "timeout") {
      out += std::to_string(10000 * (1 + rng_() % 4));
    } else if (name == "ms") {
      out += pad(clock_ms_ % 1000, 3);
    } else if (name == "hms" || name == "hms6") {
      out += name == "hms" ? hms : hms.substr(0, 2) + hms.substr(3, 2) + hms.substr(6, 2);
    } else if (name == "ymd") {
      out += std::to_string(1900 + tm.tm_year) + "-" + pad(static_cast<std::uint64_t>(tm.tm_mon + 1), 2) + "-" +
             pad(static_cast<std::uint64_t>(tm.tm_mday), 2);
    } else if (name == "ymd6") {
      out += pad(static_cast<std::uint64_t>(tm.tm_year % 100), 2) + pad(static_cast<std::uint64_t>(tm.tm_mon + 1), 2) +
             pad(static_cast<std::uint64_t>(tm.tm_mday), 2);
    } else if (name == "ymd2") {
      out += pad(static_cast<std::uint64_t>(tm.tm_year % 100), 2) + "/" +
             pad(static_cast<std::uint64_t>(tm.tm_mon + 1), 2) + "/" + pad(static_cast<std::uint64_t>(tm.tm_mday), 2);
    } else if (name == "mon") {
      out += kMonths[static_cast<std::size_t>(tm.tm_mon)];
    } else if (name == "day") {
      out += std::to_string(tm.tm_mday);
    } else if (name == "dow") {
      out += kDays[static_cast<std::size_t>(tm.tm_wday)];
    } else if (name == "epoch") {
      out += std::to_string(secs);
    } else {
      throw std::logic_error("unknown corpus placeholder " + std::string(name));
    }
  }
}

auto CorpusGenerator::next() -> LogRecord {
  static const unsigned kTotal = total_weight();
  advance_clock();
  unsigned pick = static_cast<unsigned>(rng_() % kTotal);
  const Template* chosen = &kTemplates.front();
  for (const Template& t : kTemplates) {
    if (pick < t.weight) {
      chosen = &t;
      break;
    }
    pick -= t.weight;
  }
  LogRecord record;
  record.source_id = std::string(chosen->source);
  expand(chosen->pattern, record.line);
  return record;
}

auto generate_corpus(std::size_t lines, std::uint64_t seed) -> std::vector<LogRecord> {
  CorpusGenerator gen(seed);
  std::vector<LogRecord> out;
  out.reserve(lines);
  for (std::size_t i = 0; i < lines; ++i) {
    out.push_back(gen.next());
  }
  return out;
}

auto random_ids(std::size_t count, std::uint64_t seed, std::size_t length) -> std::vector<std::string> {
  std::mt19937_64 rng(seed);
  std::unordered_set<std::string> seen;
  std::vector<std::string> out;
  out.reserve(count);
  while (out.size() < count) {
    std::string id(length, 'a');
    for (char& c : id) {
      c = static_cast<char>('a' + rng() % 26);
    }
    if (seen.insert(id).second) {
      out.push_back(std::move(id));
    }
  }
  return out;
}

auto make_queries(const std::vector<LogRecord>& lines, std::size_t per_class, std::uint64_t seed)
    -> std::vector<BenchQuery> {
  std::vector<BenchQuery> out;
  for (std::string& id : random_ids(per_class, seed)) {
    out.push_back({"id", QueryPlan::Mode::kContains, std::move(id)});
  }
  if (lines.empty()) {
    return out;
  }
  std::mt19937_64 rng(seed ^ 0x5bd1e995);
  Tokenizer tokenizer(false);
  auto is_ip = [](std::string_view t) {
    int dots = 0;
    for (char c : t) {
      if (c == '.') {
        ++dots;
      } else if (c < '0' || c > '9') {
        return false;
      }
    }
    return dots == 3;
  };
  // IPs are not composites of the tokenizer, so pick them from the raw text.
  std::size_t attempts = 0;
  std::size_t ips = 0;
  while (ips < per_class && attempts++ < per_class * 100) {
    const std::string& line = lines[rng() % lines.size()].line;
    std::vector<std::string_view> words;
    std::size_t b = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || !((line[i] >= '0' && line[i] <= '9') || line[i] == '.')) {
        if (i > b) {
          words.push_back(std::string_view(line).substr(b, i - b));
        }
        b = i + 1;
      }
    }
    for (std::string_view w : words) {
      if (is_ip(w)) {
        out.push_back({"ip", QueryPlan::Mode::kTerm, std::string(w)});
        ++ips;
        break;
      }
    }
  }
  for (std::size_t i = 0; i < per_class; ++i) {
    const auto& tokens = tokenizer.top_level_tokens(lines[rng() % lines.size()].line);
    std::vector<std::string_view> alnum;
    for (std::string_view t : tokens) {
      // A 3-character alnum term shares its text with the 3-grams of longer
      // tokens, so its candidates are not exact; leave those out.
      const bool gram_shaped = t.size() == 3 && std::all_of(t.begin(), t.end(), [](char c) {
        return char_class(static_cast<unsigned char>(c)) == CharClass::kAlnum;
      });
      if (!t.empty() && !gram_shaped && char_class(static_cast<unsigned char>(t.front())) == CharClass::kAlnum) {
        alnum.push_back(t);
      }
    }
    if (!alnum.empty()) {
      out.push_back({"extracted", QueryPlan::Mode::kTerm, std::string(alnum[rng() % alnum.size()])});
    }
  }
  return out;
}

auto format_queries(const std::vector<BenchQuery>& queries) -> std::string {
  std::string out;
  for (const BenchQuery& q : queries) {
    out += q.query_class;
    out += '\t';
    out += q.kind == QueryPlan::Mode::kContains ? "contains" : "term";
    out += '\t';
    out += q.text;
    out += '\n';
  }
  return out;
}

auto parse_queries(std::string_view text) -> std::vector<BenchQuery> {
  std::vector<BenchQuery> out;
  std::size_t line_no = 0;
  std::size_t begin = 0;
  while (begin <= text.size()) {
    std::size_t end = text.find('\n', begin);
    if (end == std::string_view::npos) {
      end = text.size();
    }
    std::string_view line = text.substr(begin, end - begin);
    begin = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') {
      line.remove_suffix(1);
    }
    if (line.empty() || line.front() == '#') {
      continue;
    }
    const std::size_t t1 = line.find('\t');
    const std::size_t t2 = t1 == std::string_view::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string_view::npos || t2 + 1 >= line.size()) {
      throw std::invalid_argument("query line " + std::to_string(line_no) +
                                  ": expected 'class<TAB>term|contains<TAB>text'");
    }
    BenchQuery q;
    q.query_class = std::string(line.substr(0, t1));
    const std::string_view kind = line.substr(t1 + 1, t2 - t1 - 1);
    if (kind == "term") {
      q.kind = QueryPlan::Mode::kTerm;
    } else if (kind == "contains") {
      q.kind = QueryPlan::Mode::kContains;
    } else {
      throw std::invalid_argument("query line " + std::to_string(line_no) + ": unknown kind '" +
                                  std::string(kind) + "'");
    }
    q.text = std::string(line.substr(t2 + 1));
    out.push_back(std::move(q));
  }
  return out;
}

}  // namespace dynawarp
