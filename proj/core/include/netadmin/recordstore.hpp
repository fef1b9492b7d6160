#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "netadmin/hardening.hpp"
#include "netadmin/rule.hpp"

// Flat-file rule persistence.
//
// A store file is a sequence of records, each ten fields
//
//   id|owner|ip|port|protocol|action|status|created|expires|description
//
// joined by 0x7C and terminated by 0x0A. Two readers exist: the legacy
// reader reproduces the original fixed 999-byte read window (and with it the
// record-overflow behaviour), the strict reader rejects anything that is not
// a well-formed, fully typed record.
namespace netadmin::store {

inline constexpr char kFieldDelimiter = '|';
inline constexpr char kRecordTerminator = '\n';
inline constexpr std::size_t kFieldCount = 10;
inline constexpr std::size_t kLegacyWindow = 999;

enum class SerializeMode { legacy, strict };

enum class RecordClass { valid, malformed, overflow_tail };

// How a legacy chunk ended. Only `newline` consumes a byte from the input.
enum class ChunkEnd { newline, window_cut, end_of_input };

std::string_view to_string(SerializeMode m);
std::string_view to_string(RecordClass c);
std::optional<SerializeMode> parse_mode(std::string_view text);

struct RuleRecord {
  std::string raw;
  std::vector<std::string> fields;
  RecordClass classification = RecordClass::malformed;
  ChunkEnd end = ChunkEnd::newline;
  std::size_t offset = 0;  // byte offset of `raw` in the parsed input

  bool usable() const noexcept { return classification != RecordClass::malformed; }
};

// Legacy mode joins fields verbatim. Strict mode validates every field
// against `limits` first and throws FieldTooLong / ForbiddenDelimiter /
// FieldValidation; nothing is returned on failure.
std::string serialize_rule(const FirewallRule& rule, SerializeMode mode,
                           const hardening::FieldLimits& limits = {});

// Never fails. See kLegacyWindow for the chunking rule.
std::vector<RuleRecord> parse_legacy(std::string_view bytes);

// Throws LineTooLong (line index), BadFieldCount or FieldValidation (line
// index, field name, reason) on the first offending line.
std::vector<FirewallRule> parse_strict(std::string_view bytes,
                                       const hardening::FieldLimits& limits = {});

// Typed view of one usable legacy record, converted the way the original
// consumers did it: leading digits for numbers, no other checks.
// Returns nullopt for malformed chunks or a zero id.
std::optional<FirewallRule> rule_from_legacy(const RuleRecord& record);

// Concatenation of every chunk plus its consumed terminator; equals the
// input that produced `records`.
std::string reassemble(const std::vector<RuleRecord>& records);

// Field checks shared by the strict serializer and parser.
FirewallRule rule_from_fields(const std::vector<std::string_view>& fields,
                              const hardening::FieldLimits& limits);

class StoreFile;

// RAII advisory lock on `<store>.lock`. Exclusive for writers, shared for
// readers; acquisition retries until `timeout` then throws LockUnavailable.
class StoreLock {
 public:
  enum class Kind { shared, exclusive };

  StoreLock(const std::filesystem::path& lock_path, Kind kind,
            std::chrono::milliseconds timeout = std::chrono::milliseconds(2000));
  ~StoreLock();
  StoreLock(StoreLock&& other) noexcept;
  StoreLock& operator=(StoreLock&&) = delete;
  StoreLock(const StoreLock&) = delete;
  StoreLock& operator=(const StoreLock&) = delete;

 private:
  int fd_ = -1;
};

// One rules file on disk plus the reader/serializer mode it is used with.
class StoreFile {
 public:
  StoreFile(std::filesystem::path path, SerializeMode mode,
            hardening::FieldLimits limits = {});

  const std::filesystem::path& path() const noexcept { return path_; }
  SerializeMode mode() const noexcept { return mode_; }
  const hardening::FieldLimits& limits() const noexcept { return limits_; }
  std::filesystem::path lock_path() const;

  StoreLock lock_exclusive() const;
  StoreLock lock_shared() const;

  // Consistent snapshot read under a shared lock.
  std::string read_bytes() const;
  std::vector<RuleRecord> records() const;
  // Legacy mode: usable legacy records via rule_from_legacy.
  // Strict mode: parse_strict (throws on corruption).
  std::vector<FirewallRule> rules() const;

  // Assigns max(id)+1 when rule.id == 0, serializes in this store's mode and
  // appends. The file is untouched when serialization throws.
  FirewallRule append_rule(FirewallRule rule);
  // Same, for callers already holding the exclusive lock.
  FirewallRule append_rule_locked(FirewallRule rule);

  // Deactivates every active rule with expires <= now. Returns the number
  // of rules changed; ids of those rules go to `deactivated` when given.
  std::size_t expire_sweep(EpochSeconds now, std::vector<std::uint64_t>* deactivated = nullptr);

  // Rewrites status and expiry of one rule. Returns the updated rule, or
  // nullopt when no usable record carries `id`.
  std::optional<FirewallRule> update_rule(std::uint64_t id, RuleStatus status,
                                          EpochSeconds expires);
  std::optional<FirewallRule> update_rule_locked(std::uint64_t id, RuleStatus status,
                                                 EpochSeconds expires);
  std::optional<FirewallRule> find_rule_locked(std::uint64_t id) const;

  std::uint64_t next_id_locked() const;

 private:
  std::string read_unlocked() const;
  void replace_unlocked(const std::string& bytes) const;
  std::vector<FirewallRule> rules_from_bytes(std::string_view bytes) const;

  std::filesystem::path path_;
  SerializeMode mode_;
  hardening::FieldLimits limits_;
};

// Append-only mutation log, one `epoch|actor|operation|rule_id` line per
// store mutation.
struct AuditEntry {
  EpochSeconds epoch = 0;
  std::string actor;
  std::string operation;
  std::uint64_t rule_id = 0;

  bool operator==(const AuditEntry&) const = default;
};

class AuditLog {
 public:
  explicit AuditLog(std::filesystem::path path);

  void append(const AuditEntry& entry) const;
  std::vector<AuditEntry> entries() const;
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace netadmin::store
