#include "netadmin/recordstore.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>
#include <thread>

#include "netadmin/error.hpp"
#include "netadmin/ipv4.hpp"

namespace netadmin::store {

namespace fs = std::filesystem;

namespace {

constexpr const char* kFieldNames[kFieldCount] = {
    "id", "owner", "ip", "port", "protocol", "action", "status", "created", "expires", "description"};

std::vector<std::string_view> split_fields(std::string_view chunk) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pipe = chunk.find(kFieldDelimiter, start);
    if (pipe == std::string_view::npos) {
      out.push_back(chunk.substr(start));
      return out;
    }
    out.push_back(chunk.substr(start, pipe - start));
    start = pipe + 1;
  }
}

Error field_error(std::size_t field, std::string why) {
  return std::move(Error(ErrorKind::FieldValidation,
                         std::string(kFieldNames[field]) + ": " + why)
                       .in_field(kFieldNames[field])
                       .with_reason(std::move(why)));
}

// Canonical unsigned decimal: no sign, no leading zeros.
template <typename T>
std::optional<T> parse_canonical(std::string_view text) {
  if (text.empty() || (text.size() > 1 && text.front() == '0')) return std::nullopt;
  T value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

std::optional<EpochSeconds> parse_epoch(std::string_view text) {
  if (!text.empty() && text.front() == '-') {
    auto magnitude = parse_canonical<EpochSeconds>(text.substr(1));
    if (!magnitude || *magnitude == 0) return std::nullopt;
    return -*magnitude;
  }
  return parse_canonical<EpochSeconds>(text);
}

// atoi-style: leading decimal digits, 0 when there are none.
template <typename T>
T leading_number(std::string_view text) {
  T value{};
  std::from_chars(text.data(), text.data() + text.size(), value);
  return value;
}

bool is_owner_byte(unsigned char c) {
  return std::isalnum(c) || c == '.' || c == '_' || c == '-' || c == '@';
}

std::string join_fields(const FirewallRule& rule) {
  std::string out;
  out.reserve(64 + rule.owner.size() + rule.description.size());
  auto add = [&out](std::string_view part, bool last = false) {
    out += part;
    if (!last) out += kFieldDelimiter;
  };
  add(std::to_string(rule.id));
  add(rule.owner);
  add(rule.ip);
  add(std::to_string(rule.port));
  add(to_string(rule.protocol));
  add(to_string(rule.action));
  add(to_string(rule.status));
  add(std::to_string(rule.created));
  add(std::to_string(rule.expires));
  add(rule.description, true);
  return out;
}

void check_no_delimiters(std::string_view value, std::size_t field) {
  auto pos = value.find_first_of("|\n");
  if (pos != std::string_view::npos) {
    throw Error(ErrorKind::ForbiddenDelimiter,
                std::string(kFieldNames[field]) + ": delimiter byte at offset " + std::to_string(pos))
        .at_offset(pos)
        .in_field(kFieldNames[field]);
  }
}

}  // namespace

std::string_view to_string(SerializeMode m) { return m == SerializeMode::legacy ? "legacy" : "strict"; }

std::string_view to_string(RecordClass c) {
  switch (c) {
    case RecordClass::valid: return "valid";
    case RecordClass::malformed: return "malformed";
    case RecordClass::overflow_tail: return "overflow_tail";
  }
  return "malformed";
}

std::optional<SerializeMode> parse_mode(std::string_view text) {
  if (text == "legacy") return SerializeMode::legacy;
  if (text == "strict") return SerializeMode::strict;
  return std::nullopt;
}

FirewallRule rule_from_fields(const std::vector<std::string_view>& f,
                              const hardening::FieldLimits& limits) {
  if (f.size() != kFieldCount) {
    throw Error(ErrorKind::BadFieldCount,
                "expected 10 fields, found " + std::to_string(f.size()));
  }
  FirewallRule rule;

  auto id = parse_canonical<std::uint64_t>(f[0]);
  if (!id || *id == 0) throw field_error(0, "not a positive integer");
  rule.id = *id;

  if (f[1].empty()) throw field_error(1, "empty");
  if (f[1].size() > limits.max_owner) throw field_error(1, "longer than " + std::to_string(limits.max_owner) + " bytes");
  if (!std::all_of(f[1].begin(), f[1].end(), [](char c) { return is_owner_byte(static_cast<unsigned char>(c)); })) {
    throw field_error(1, "not a principal token");
  }
  rule.owner = std::string(f[1]);

  if (!Ipv4Cidr::parse(f[2])) throw field_error(2, "not an IPv4 address or CIDR");
  rule.ip = std::string(f[2]);

  auto port = parse_canonical<int>(f[3]);
  if (!port || *port < 1 || *port > 65535) throw field_error(3, "not in 1-65535");
  rule.port = *port;

  auto protocol = parse_protocol(f[4]);
  if (!protocol) throw field_error(4, "not tcp or udp");
  rule.protocol = *protocol;

  auto action = parse_action(f[5]);
  if (!action) throw field_error(5, "not allow or deny");
  rule.action = *action;

  auto status = parse_status(f[6]);
  if (!status) throw field_error(6, "not active or inactive");
  rule.status = *status;

  auto created = parse_epoch(f[7]);
  if (!created) throw field_error(7, "not an integer");
  rule.created = *created;

  auto expires = parse_epoch(f[8]);
  if (!expires) throw field_error(8, "not an integer");
  if (*expires <= *created) throw field_error(8, "not after created");
  rule.expires = *expires;

  if (f[9].size() > limits.max_description) {
    throw field_error(9, "longer than " + std::to_string(limits.max_description) + " bytes");
  }
  rule.description = std::string(f[9]);
  return rule;
}

std::string serialize_rule(const FirewallRule& rule, SerializeMode mode,
                           const hardening::FieldLimits& limits) {
  if (mode == SerializeMode::legacy) {
    return join_fields(rule) + kRecordTerminator;
  }

  if (rule.owner.size() > limits.max_owner) {
    throw Error(ErrorKind::FieldTooLong, "owner exceeds " + std::to_string(limits.max_owner) + " bytes")
        .at_offset(limits.max_owner)
        .in_field("owner");
  }
  if (rule.description.size() > limits.max_description) {
    throw Error(ErrorKind::FieldTooLong,
                "description exceeds " + std::to_string(limits.max_description) + " bytes")
        .at_offset(limits.max_description)
        .in_field("description");
  }
  check_no_delimiters(rule.owner, 1);
  check_no_delimiters(rule.ip, 2);
  check_no_delimiters(rule.description, 9);

  std::string joined = join_fields(rule);
  if (joined.size() + 1 > limits.max_record) {
    throw Error(ErrorKind::FieldTooLong, "record exceeds " + std::to_string(limits.max_record) + " bytes")
        .at_offset(limits.max_record);
  }
  // Same checks the strict reader applies, so every accepted rule reads back.
  rule_from_fields(split_fields(joined), limits);
  joined += kRecordTerminator;
  return joined;
}

std::vector<RuleRecord> parse_legacy(std::string_view bytes) {
  std::vector<RuleRecord> out;
  std::size_t pos = 0;
  bool after_cut = false;
  while (pos < bytes.size()) {
    const std::size_t window = std::min(kLegacyWindow, bytes.size() - pos);
    const auto view = bytes.substr(pos, window);
    RuleRecord rec;
    rec.offset = pos;
    std::size_t next;
    if (auto nl = view.find(kRecordTerminator); nl != std::string_view::npos) {
      rec.raw = std::string(view.substr(0, nl));
      rec.end = ChunkEnd::newline;
      next = pos + nl + 1;
    } else if (window == kLegacyWindow) {
      rec.raw = std::string(view);
      rec.end = ChunkEnd::window_cut;
      next = pos + window;
    } else {
      rec.raw = std::string(view);
      rec.end = ChunkEnd::end_of_input;
      next = bytes.size();
    }
    for (auto field : split_fields(rec.raw)) rec.fields.emplace_back(field);
    if (rec.fields.size() != kFieldCount) {
      rec.classification = RecordClass::malformed;
    } else {
      rec.classification = after_cut ? RecordClass::overflow_tail : RecordClass::valid;
    }
    after_cut = rec.end == ChunkEnd::window_cut;
    out.push_back(std::move(rec));
    pos = next;
  }
  return out;
}

std::vector<FirewallRule> parse_strict(std::string_view bytes, const hardening::FieldLimits& limits) {
  std::vector<FirewallRule> out;
  std::size_t pos = 0;
  std::size_t line = 0;
  while (pos < bytes.size()) {
    auto nl = bytes.find(kRecordTerminator, pos);
    const bool terminated = nl != std::string_view::npos;
    const std::size_t end = terminated ? nl : bytes.size();
    const auto content = bytes.substr(pos, end - pos);
    if (content.size() + (terminated ? 1 : 0) > limits.max_record) {
      throw Error(ErrorKind::LineTooLong,
                  "line " + std::to_string(line) + " is " + std::to_string(content.size()) +
                      " bytes, limit " + std::to_string(limits.max_record))
          .at_line(line);
    }
    try {
      out.push_back(rule_from_fields(split_fields(content), limits));
    } catch (Error& e) {
      e.at_line(line);
      throw;
    }
    pos = end + 1;
    ++line;
  }
  return out;
}

std::optional<FirewallRule> rule_from_legacy(const RuleRecord& record) {
  if (!record.usable()) return std::nullopt;
  const auto& f = record.fields;
  FirewallRule rule;
  rule.id = leading_number<std::uint64_t>(f[0]);
  if (rule.id == 0) return std::nullopt;
  rule.owner = f[1];
  rule.ip = f[2];
  rule.port = leading_number<int>(f[3]);
  rule.protocol = parse_protocol(f[4]).value_or(Protocol::tcp);
  rule.action = parse_action(f[5]).value_or(Action::allow);
  rule.status = f[6] == "active" ? RuleStatus::active : RuleStatus::inactive;
  rule.created = leading_number<EpochSeconds>(f[7]);
  rule.expires = leading_number<EpochSeconds>(f[8]);
  rule.description = f[9];
  return rule;
}

std::string reassemble(const std::vector<RuleRecord>& records) {
  std::string out;
  for (const auto& rec : records) {
    out += rec.raw;
    if (rec.end == ChunkEnd::newline) out += kRecordTerminator;
  }
  return out;
}

// ---------------------------------------------------------------------------
// StoreLock

StoreLock::StoreLock(const fs::path& lock_path, Kind kind, std::chrono::milliseconds timeout) {
  fd_ = ::open(lock_path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
  if (fd_ < 0) {
    throw Error(ErrorKind::LockUnavailable,
                "cannot open lock file " + lock_path.string() + ": " + std::strerror(errno));
  }
  const int op = (kind == Kind::exclusive ? LOCK_EX : LOCK_SH) | LOCK_NB;
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  while (::flock(fd_, op) != 0) {
    const bool retryable = errno == EWOULDBLOCK || errno == EINTR;
    if (!retryable || std::chrono::steady_clock::now() >= deadline) {
      ::close(fd_);
      fd_ = -1;
      throw Error(ErrorKind::LockUnavailable, "store lock busy: " + lock_path.string());
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(1));
  }
}

StoreLock::~StoreLock() {
  if (fd_ >= 0) {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
}

StoreLock::StoreLock(StoreLock&& other) noexcept : fd_(other.fd_) { other.fd_ = -1; }

// ---------------------------------------------------------------------------
// StoreFile

StoreFile::StoreFile(fs::path path, SerializeMode mode, hardening::FieldLimits limits)
    : path_(std::move(path)), mode_(mode), limits_(limits) {}

fs::path StoreFile::lock_path() const {
  auto p = path_;
  p += ".lock";
  return p;
}

StoreLock StoreFile::lock_exclusive() const { return StoreLock(lock_path(), StoreLock::Kind::exclusive); }
StoreLock StoreFile::lock_shared() const { return StoreLock(lock_path(), StoreLock::Kind::shared); }

std::string StoreFile::read_unlocked() const {
  std::ifstream in(path_, std::ios::binary);
  if (!in) return {};
  std::ostringstream buf;
  buf << in.rdbuf();
  return std::move(buf).str();
}

void StoreFile::replace_unlocked(const std::string& bytes) const {
  auto tmp = path_;
  tmp += ".tmp";
  {
    const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
    if (fd < 0) throw Error(ErrorKind::Io, "cannot write " + tmp.string());
    std::size_t done = 0;
    while (done < bytes.size()) {
      auto n = ::write(fd, bytes.data() + done, bytes.size() - done);
      if (n < 0) {
        if (errno == EINTR) continue;
        ::close(fd);
        throw Error(ErrorKind::Io, "write failed on " + tmp.string());
      }
      done += static_cast<std::size_t>(n);
    }
    ::fdatasync(fd);
    ::close(fd);
  }
  fs::rename(tmp, path_);
}

std::string StoreFile::read_bytes() const {
  auto lock = lock_shared();
  return read_unlocked();
}

std::vector<RuleRecord> StoreFile::records() const { return parse_legacy(read_bytes()); }

std::vector<FirewallRule> StoreFile::rules_from_bytes(std::string_view bytes) const {
  if (mode_ == SerializeMode::strict) return parse_strict(bytes, limits_);
  std::vector<FirewallRule> out;
  for (const auto& rec : parse_legacy(bytes)) {
    if (auto rule = rule_from_legacy(rec)) out.push_back(std::move(*rule));
  }
  return out;
}

std::vector<FirewallRule> StoreFile::rules() const { return rules_from_bytes(read_bytes()); }

std::uint64_t StoreFile::next_id_locked() const {
  std::uint64_t max_id = 0;
  for (const auto& rule : rules_from_bytes(read_unlocked())) max_id = std::max(max_id, rule.id);
  return max_id + 1;
}

FirewallRule StoreFile::append_rule(FirewallRule rule) {
  auto lock = lock_exclusive();
  return append_rule_locked(std::move(rule));
}

FirewallRule StoreFile::append_rule_locked(FirewallRule rule) {
  if (rule.id == 0) rule.id = next_id_locked();
  const std::string bytes = serialize_rule(rule, mode_, limits_);

  const int fd = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd < 0) throw Error(ErrorKind::Io, "cannot open " + path_.string() + ": " + std::strerror(errno));
  std::size_t done = 0;
  while (done < bytes.size()) {
    auto n = ::write(fd, bytes.data() + done, bytes.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      ::close(fd);
      throw Error(ErrorKind::Io, "append failed on " + path_.string());
    }
    done += static_cast<std::size_t>(n);
  }
  ::fdatasync(fd);
  ::close(fd);
  return rule;
}

std::optional<FirewallRule> StoreFile::find_rule_locked(std::uint64_t id) const {
  for (auto& rule : rules_from_bytes(read_unlocked())) {
    if (rule.id == id) return rule;
  }
  return std::nullopt;
}

std::optional<FirewallRule> StoreFile::update_rule(std::uint64_t id, RuleStatus status,
                                                   EpochSeconds expires) {
  auto lock = lock_exclusive();
  return update_rule_locked(id, status, expires);
}

std::optional<FirewallRule> StoreFile::update_rule_locked(std::uint64_t id, RuleStatus status,
                                                          EpochSeconds expires) {
  const std::string bytes = read_unlocked();
  if (mode_ == SerializeMode::strict) {
    auto rules = parse_strict(bytes, limits_);
    auto it = std::find_if(rules.begin(), rules.end(), [id](const auto& r) { return r.id == id; });
    if (it == rules.end()) return std::nullopt;
    it->status = status;
    it->expires = expires;
    std::string out;
    for (const auto& r : rules) out += serialize_rule(r, SerializeMode::strict, limits_);
    replace_unlocked(out);
    return *it;
  }

  // Legacy: patch the two fields in place and leave every other byte alone,
  // the way the original rewrite did.
  auto records = parse_legacy(bytes);
  for (auto& rec : records) {
    auto rule = rule_from_legacy(rec);
    if (!rule || rule->id != id) continue;
    rec.fields[6] = std::string(to_string(status));
    rec.fields[8] = std::to_string(expires);
    std::string raw;
    for (std::size_t i = 0; i < rec.fields.size(); ++i) {
      if (i) raw += kFieldDelimiter;
      raw += rec.fields[i];
    }
    rec.raw = std::move(raw);
    replace_unlocked(reassemble(records));
    rule->status = status;
    rule->expires = expires;
    return rule;
  }
  return std::nullopt;
}

std::size_t StoreFile::expire_sweep(EpochSeconds now, std::vector<std::uint64_t>* deactivated) {
  auto lock = lock_exclusive();
  const std::string bytes = read_unlocked();
  std::size_t changed = 0;

  if (mode_ == SerializeMode::strict) {
    auto rules = parse_strict(bytes, limits_);
    std::string out;
    for (auto& r : rules) {
      if (r.status == RuleStatus::active && r.expires <= now) {
        r.status = RuleStatus::inactive;
        ++changed;
        if (deactivated) deactivated->push_back(r.id);
      }
      out += serialize_rule(r, SerializeMode::strict, limits_);
    }
    if (changed) replace_unlocked(out);
    return changed;
  }

  auto records = parse_legacy(bytes);
  for (auto& rec : records) {
    auto rule = rule_from_legacy(rec);
    if (!rule || rule->status != RuleStatus::active || rule->expires > now) continue;
    rec.fields[6] = "inactive";
    std::string raw;
    for (std::size_t i = 0; i < rec.fields.size(); ++i) {
      if (i) raw += kFieldDelimiter;
      raw += rec.fields[i];
    }
    rec.raw = std::move(raw);
    ++changed;
    if (deactivated) deactivated->push_back(rule->id);
  }
  if (changed) replace_unlocked(reassemble(records));
  return changed;
}

// ---------------------------------------------------------------------------
// AuditLog

AuditLog::AuditLog(fs::path path) : path_(std::move(path)) {}

void AuditLog::append(const AuditEntry& entry) const {
  std::string line = std::to_string(entry.epoch) + '|' + entry.actor + '|' + entry.operation + '|' +
                     std::to_string(entry.rule_id) + '\n';
  const int fd = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd < 0) throw Error(ErrorKind::Io, "cannot open audit log " + path_.string());
  // O_APPEND with a single write keeps concurrent lines whole.
  auto n = ::write(fd, line.data(), line.size());
  ::close(fd);
  if (n != static_cast<ssize_t>(line.size())) throw Error(ErrorKind::Io, "short audit write");
}

std::vector<AuditEntry> AuditLog::entries() const {
  std::vector<AuditEntry> out;
  std::ifstream in(path_, std::ios::binary);
  std::string line;
  while (std::getline(in, line)) {
    auto fields = split_fields(line);
    if (fields.size() != 4) continue;
    AuditEntry e;
    e.epoch = leading_number<EpochSeconds>(fields[0]);
    e.actor = std::string(fields[1]);
    e.operation = std::string(fields[2]);
    e.rule_id = leading_number<std::uint64_t>(fields[3]);
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace netadmin::store
