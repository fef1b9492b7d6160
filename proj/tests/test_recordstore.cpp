#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <set>
#include <functional>
#include <thread>

#include "netadmin/error.hpp"
#include "netadmin/record_fuzz.hpp"
#include "netadmin/recordstore.hpp"
#include "support.hpp"

using namespace netadmin;
using namespace netadmin::store;
using testing_support::TempDir;

namespace {

FirewallRule sample_rule() {
  FirewallRule r;
  r.id = 1;
  r.owner = "alice";
  r.ip = "10.10.3.7";
  r.port = 22;
  r.created = 1700000000;
  r.expires = 1731536000;
  r.description = "web box";
  return r;
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::Io;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST(Serialize, JoinsTenFieldsInOrder) {
  EXPECT_EQ(serialize_rule(sample_rule(), SerializeMode::legacy),
            "1|alice|10.10.3.7|22|tcp|allow|active|1700000000|1731536000|web box\n");
  EXPECT_EQ(serialize_rule(sample_rule(), SerializeMode::strict),
            "1|alice|10.10.3.7|22|tcp|allow|active|1700000000|1731536000|web box\n");
}

TEST(Serialize, LegacyKeepsPipeCorruption) {
  auto r = sample_rule();
  r.description = "x|y";
  auto bytes = serialize_rule(r, SerializeMode::legacy);
  bytes.pop_back();
  EXPECT_EQ(std::count(bytes.begin(), bytes.end(), '|') + 1, 11);
}

TEST(Serialize, StrictLimits) {
  auto r = sample_rule();
  r.description = std::string(257, 'd');
  EXPECT_EQ(kind_of([&] { serialize_rule(r, SerializeMode::strict); }), ErrorKind::FieldTooLong);
  r.description = std::string(256, 'd');
  EXPECT_NO_THROW(serialize_rule(r, SerializeMode::strict));

  r.description = "ok";
  r.owner = std::string(129, 'o');
  EXPECT_EQ(kind_of([&] { serialize_rule(r, SerializeMode::strict); }), ErrorKind::FieldTooLong);

  r = sample_rule();
  r.description = "a\nb";
  EXPECT_EQ(kind_of([&] { serialize_rule(r, SerializeMode::strict); }), ErrorKind::ForbiddenDelimiter);
  r.description = "a|b";
  try {
    serialize_rule(r, SerializeMode::strict);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ForbiddenDelimiter);
    EXPECT_EQ(e.offset(), 1u);
    EXPECT_EQ(e.field(), "description");
  }
}

TEST(Serialize, StrictRefusesUntypedFields) {
  auto r = sample_rule();
  r.ip = "10.10.3.300";
  EXPECT_EQ(kind_of([&] { serialize_rule(r, SerializeMode::strict); }), ErrorKind::FieldValidation);
  r = sample_rule();
  r.expires = r.created;
  EXPECT_EQ(kind_of([&] { serialize_rule(r, SerializeMode::strict); }), ErrorKind::FieldValidation);
}

TEST(Legacy, ShortRecordIsOneValidRecord) {
  auto recs = parse_legacy(serialize_rule(sample_rule(), SerializeMode::legacy));
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(recs[0].classification, RecordClass::valid);
  EXPECT_EQ(recs[0].fields.size(), 10u);
  EXPECT_EQ(recs[0].end, ChunkEnd::newline);
}

TEST(Legacy, WindowCutProducesOverflowTail) {
  auto tail = serialize_rule(sample_rule(), SerializeMode::legacy);
  auto recs = parse_legacy(std::string(999, 'A') + tail);
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(recs[0].classification, RecordClass::malformed);
  EXPECT_EQ(recs[0].raw.size(), 999u);
  EXPECT_EQ(recs[0].fields.size(), 1u);
  EXPECT_EQ(recs[0].end, ChunkEnd::window_cut);
  EXPECT_EQ(recs[1].classification, RecordClass::overflow_tail);
  EXPECT_EQ(recs[1].fields.size(), 10u);
  EXPECT_EQ(recs[1].offset, 999u);
}

TEST(Legacy, NewlineAtLastWindowByte) {
  // 998 bytes of content then the terminator: no cut.
  std::string line(998, 'x');
  auto recs = parse_legacy(line + "\nabc");
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(recs[0].end, ChunkEnd::newline);
  EXPECT_EQ(recs[1].end, ChunkEnd::end_of_input);
  // 999 bytes then a newline: cut, then an empty newline-terminated chunk.
  recs = parse_legacy(std::string(999, 'x') + "\n");
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(recs[0].end, ChunkEnd::window_cut);
  EXPECT_EQ(recs[1].raw, "");
  EXPECT_EQ(recs[1].end, ChunkEnd::newline);
}

TEST(Legacy, EmptyInput) { EXPECT_TRUE(parse_legacy("").empty()); }

TEST(Legacy, MatchesReferenceMachineAndReassembles) {
  std::mt19937_64 rng(17);
  for (int iter = 0; iter < 1000; ++iter) {
    std::string input;
    const auto len = rng() % 3000;
    for (std::size_t i = 0; i < len; ++i) {
      const auto roll = rng() % 100;
      input += roll < 3 ? '\n' : roll < 15 ? '|' : static_cast<char>(rng() & 0xFF);
    }
    auto got = parse_legacy(input);
    auto want = testing_support::reference_legacy(input);
    ASSERT_EQ(got.size(), want.size()) << "iteration " << iter;
    for (std::size_t i = 0; i < got.size(); ++i) {
      EXPECT_EQ(got[i].raw, want[i].raw);
      EXPECT_EQ(got[i].offset, want[i].offset);
      EXPECT_EQ(std::string(to_string(got[i].classification)), want[i].cls);
      EXPECT_EQ(got[i].fields, want[i].fields);
    }
    ASSERT_EQ(reassemble(got), input);
  }
}

TEST(Legacy, WindowLaw) {
  std::mt19937_64 rng(5);
  for (int iter = 0; iter < 200; ++iter) {
    std::string input(999 + rng() % 500, 'a');
    for (std::size_t i = 999; i < input.size(); ++i) {
      if (rng() % 50 == 0) input[i] = '\n';
    }
    for (std::size_t i = 0; i < 999; ++i) {
      if (rng() % 20 == 0) input[i] = '|';
    }
    auto recs = parse_legacy(input);
    ASSERT_FALSE(recs.empty());
    EXPECT_EQ(recs[0].raw.size(), 999u);
  }
}

TEST(Strict, RoundTripExample) {
  auto r = sample_rule();
  auto rules = parse_strict(serialize_rule(r, SerializeMode::strict));
  ASSERT_EQ(rules.size(), 1u);
  EXPECT_EQ(rules[0], r);
}

TEST(Strict, OverflowPayloadIsLineTooLong) {
  auto input = std::string(999, 'A') + serialize_rule(sample_rule(), SerializeMode::legacy);
  try {
    parse_strict(input);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::LineTooLong);
    EXPECT_EQ(e.line(), 0u);
  }
}

TEST(Strict, LineLimitCountsTerminator) {
  auto r = sample_rule();
  r.description.clear();
  const auto base = serialize_rule(r, SerializeMode::legacy).size();
  r.description = std::string(999 - base, 'd');  // exactly 999 with the terminator
  auto line = serialize_rule(r, SerializeMode::legacy);
  ASSERT_EQ(line.size(), 999u);
  const hardening::FieldLimits wide{128, 1000, 999};
  EXPECT_EQ(parse_strict(line, wide).size(), 1u);
  line.insert(line.begin() + 70, 'd');
  EXPECT_EQ(kind_of([&] { parse_strict(line, wide); }), ErrorKind::LineTooLong);
}

TEST(Strict, ErrorsCarryLineIndex) {
  auto good = serialize_rule(sample_rule(), SerializeMode::strict);
  try {
    parse_strict(good + good + "1|a|b|c|d|e|f|g|h\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::BadFieldCount);
    EXPECT_EQ(e.line(), 2u);
  }
  try {
    parse_strict(good + "2|bob|10.0.0.1|022|tcp|allow|active|1|2|x\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::FieldValidation);
    EXPECT_EQ(e.field(), "port");
    EXPECT_EQ(e.line(), 1u);
  }
}

TEST(Strict, UnterminatedLastLineStillParses) {
  auto bytes = serialize_rule(sample_rule(), SerializeMode::strict);
  bytes.pop_back();
  EXPECT_EQ(parse_strict(bytes).size(), 1u);
}

TEST(Property, StrictRoundTripIsIdentity) {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 1000; ++i) {
    auto r = testing_support::random_strict_rule(rng);
    const auto bytes = serialize_rule(r, SerializeMode::strict);
    auto back = parse_strict(bytes);
    ASSERT_EQ(back.size(), 1u);
    ASSERT_EQ(back[0], r) << bytes;
    ASSERT_EQ(serialize_rule(back[0], SerializeMode::strict), bytes);
  }
}

TEST(Property, ReadersAgreeOnStrictInput) {
  std::mt19937_64 rng(3);
  for (int iter = 0; iter < 100; ++iter) {
    std::string bytes;
    std::vector<FirewallRule> rules;
    for (int n = rng() % 20; n > 0; --n) {
      rules.push_back(testing_support::random_strict_rule(rng));
      bytes += serialize_rule(rules.back(), SerializeMode::strict);
    }
    auto legacy = parse_legacy(bytes);
    ASSERT_EQ(legacy.size(), rules.size());
    for (std::size_t i = 0; i < rules.size(); ++i) {
      ASSERT_EQ(legacy[i].classification, RecordClass::valid);
      ASSERT_EQ(rule_from_fields({legacy[i].fields.begin(), legacy[i].fields.end()}, {}), rules[i]);
    }
    EXPECT_EQ(parse_strict(bytes), rules);
  }
}

TEST(Fuzz, FindsDivergenceWithoutKnownPayload) {
  auto d = fuzz::find_divergence(2024, 200000);
  ASSERT_TRUE(d.has_value());
  EXPECT_GE(d->legacy_usable, 2u);
  EXPECT_GE(d->overflow_tails, 1u);
  EXPECT_NE(d->strict_error, ErrorKind::Io);
  // The witness re-checks independently.
  auto legacy = parse_legacy(d->input);
  EXPECT_GE(std::count_if(legacy.begin(), legacy.end(), [](const RuleRecord& r) { return r.usable(); }), 2);
  EXPECT_THROW(parse_strict(d->input), Error);
}

TEST(Fuzz, ClassifyIgnoresAgreeingInput) {
  EXPECT_FALSE(fuzz::classify(serialize_rule(sample_rule(), SerializeMode::strict)).has_value());
  EXPECT_FALSE(fuzz::classify("").has_value());
}

TEST(StoreFile, AppendAssignsMaxPlusOne) {
  TempDir dir("store");
  StoreFile store(dir / "rules.db", SerializeMode::strict);
  auto r = sample_rule();
  r.id = 0;
  EXPECT_EQ(store.append_rule(r).id, 1u);
  r.id = 3;
  store.append_rule(r);
  r.id = 0;
  EXPECT_EQ(store.append_rule(r).id, 4u);
  EXPECT_EQ(store.rules().size(), 3u);
}

TEST(StoreFile, FailedStrictAppendLeavesFileUnchanged) {
  TempDir dir("store");
  StoreFile store(dir / "rules.db", SerializeMode::strict);
  store.append_rule(sample_rule());
  const auto before = slurp(store.path());
  auto bad = sample_rule();
  bad.id = 0;
  bad.description = "pipe|here";
  EXPECT_EQ(kind_of([&] { store.append_rule(bad); }), ErrorKind::ForbiddenDelimiter);
  EXPECT_EQ(slurp(store.path()), before);
}

TEST(StoreFile, ExpireSweepBoundaryAndIdempotence) {
  TempDir dir("store");
  StoreFile store(dir / "rules.db", SerializeMode::strict);
  const EpochSeconds t = 1700000000;
  for (int i = 0; i < 5; ++i) {
    auto r = sample_rule();
    r.id = 0;
    r.created = t;
    r.expires = i < 2 ? t + 10 : t + kRuleLifetime;
    store.append_rule(r);
  }
  EXPECT_EQ(store.expire_sweep(t + 9), 0u);
  EXPECT_EQ(store.expire_sweep(t + 10), 2u);  // inclusive
  const auto after = slurp(store.path());
  EXPECT_EQ(store.expire_sweep(t + 10), 0u);
  EXPECT_EQ(slurp(store.path()), after);
  EXPECT_EQ(store.expire_sweep(t + kRuleLifetime - 1), 0u);
  auto rules = parse_strict(slurp(store.path()));
  EXPECT_EQ(std::count_if(rules.begin(), rules.end(), [](auto& r) { return r.status == RuleStatus::inactive; }), 2);
}

TEST(StoreFile, LegacyUpdateKeepsOverflowBytes) {
  TempDir dir("store");
  StoreFile store(dir / "rules.db", SerializeMode::legacy);
  auto r = sample_rule();
  store.append_rule(r);
  auto updated = store.update_rule(1, RuleStatus::inactive, r.expires + 5);
  ASSERT_TRUE(updated);
  EXPECT_EQ(updated->status, RuleStatus::inactive);
  EXPECT_EQ(store.rules().at(0).expires, r.expires + 5);
  EXPECT_FALSE(store.update_rule(77, RuleStatus::active, 1).has_value());
}

TEST(StoreFile, ExclusiveLockTimesOut) {
  TempDir dir("store");
  StoreFile store(dir / "rules.db", SerializeMode::strict);
  auto held = store.lock_exclusive();
  std::thread other([&] {
    EXPECT_EQ(kind_of([&] { StoreLock(store.lock_path(), StoreLock::Kind::exclusive, std::chrono::milliseconds(50)); }),
              ErrorKind::LockUnavailable);
  });
  other.join();
}

TEST(StoreFile, ConcurrentAppendsKeepIdsUnique) {
  TempDir dir("store");
  StoreFile store(dir / "rules.db", SerializeMode::strict);
  std::vector<std::thread> writers;
  for (int w = 0; w < 4; ++w) {
    writers.emplace_back([&] {
      StoreFile mine(store.path(), SerializeMode::strict);
      for (int i = 0; i < 25; ++i) {
        auto r = sample_rule();
        r.id = 0;
        mine.append_rule(r);
      }
    });
  }
  for (auto& w : writers) w.join();
  auto rules = store.rules();
  ASSERT_EQ(rules.size(), 100u);
  std::set<std::uint64_t> ids;
  for (auto& r : rules) ids.insert(r.id);
  EXPECT_EQ(ids.size(), 100u);
}

TEST(Audit, AppendAndRead) {
  TempDir dir("audit");
  AuditLog log(dir / "audit.log");
  log.append({1, "alice", "create", 4});
  log.append({2, "system", "load", 4});
  auto entries = log.entries();
  ASSERT_EQ(entries.size(), 2u);
  EXPECT_EQ(entries[1], (AuditEntry{2, "system", "load", 4}));
  EXPECT_EQ(slurp(dir / "audit.log"), "1|alice|create|4\n2|system|load|4\n");
}
