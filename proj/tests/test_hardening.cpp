#include <gtest/gtest.h>

#include <random>

#include "netadmin/error.hpp"
#include "netadmin/hardening.hpp"
#include "netadmin/recordstore.hpp"
#include "support.hpp"

using namespace netadmin;
using namespace netadmin::hardening;

namespace {

std::optional<ErrorKind> sanitize_error(std::string_view s, std::size_t* offset = nullptr) {
  try {
    sanitize_description(s);
  } catch (const Error& e) {
    if (offset && e.offset()) *offset = *e.offset();
    return e.kind();
  }
  return std::nullopt;
}

const std::string kKey(32, 'k');

}  // namespace

TEST(Sanitize, AcceptsPlainText) {
  EXPECT_EQ(sanitize_description("ssh for build box"), "ssh for build box");
  EXPECT_EQ(sanitize_description("a < b and 3<4"), "a < b and 3<4");
  EXPECT_EQ(sanitize_description(""), "");
  EXPECT_EQ(sanitize_description(std::string(256, 'x')).size(), 256u);
}

TEST(Sanitize, RejectsDelimitersAndMarkup) {
  std::size_t off = 99;
  EXPECT_EQ(sanitize_error("ab|c", &off), ErrorKind::ForbiddenDelimiter);
  EXPECT_EQ(off, 2u);
  EXPECT_EQ(sanitize_error("x\ny"), ErrorKind::ForbiddenDelimiter);
  EXPECT_EQ(sanitize_error("x\ry"), ErrorKind::ForbiddenDelimiter);
  EXPECT_EQ(sanitize_error("hi <script>", &off), ErrorKind::MarkupRejected);
  EXPECT_EQ(off, 3u);
  EXPECT_EQ(sanitize_error("</b>"), ErrorKind::MarkupRejected);
  EXPECT_EQ(sanitize_error("trailing <"), ErrorKind::MarkupRejected);
}

TEST(Sanitize, LengthCheckedFirst) {
  EXPECT_EQ(sanitize_error(std::string(300, '|')), ErrorKind::FieldTooLong);
  EXPECT_EQ(sanitize_error(std::string(257, 'a')), ErrorKind::FieldTooLong);
}

TEST(Escape, Metacharacters) {
  EXPECT_EQ(escape_markup("<script>\"x\" & 'y'</script>"),
            "&lt;script&gt;&quot;x&quot; &amp; &#39;y&#39;&lt;/script&gt;");
}

TEST(Escape, NotIdempotent) {
  const auto once = escape_markup("<b>");
  EXPECT_NE(escape_markup(once), once);
}

TEST(Property, EscapeOutputHasNoMetacharacters) {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 2000; ++i) {
    std::string s;
    for (int n = rng() % 64; n > 0; --n) s += static_cast<char>(rng() & 0xFF);
    const auto out = escape_markup(s);
    ASSERT_EQ(out.find_first_of("<>\"'"), std::string::npos);
    // every '&' starts an entity
    for (std::size_t p = out.find('&'); p != std::string::npos; p = out.find('&', p + 1)) {
      ASSERT_NE(out.find(';', p), std::string::npos);
    }
  }
}

TEST(Property, SanitizedDescriptionsSurviveStrictRoundTrip) {
  std::mt19937_64 rng(21);
  int accepted = 0;
  for (int i = 0; i < 5000; ++i) {
    std::string s;
    for (int n = rng() % 300; n > 0; --n) {
      s += rng() % 4 ? static_cast<char>(' ' + rng() % 95) : static_cast<char>(rng() & 0xFF);
    }
    std::string clean;
    try {
      clean = sanitize_description(s);
    } catch (const Error&) {
      continue;
    }
    ++accepted;
    auto r = testing_support::random_strict_rule(rng);
    r.description = clean;
    auto back = store::parse_strict(store::serialize_rule(r, store::SerializeMode::strict));
    ASSERT_EQ(back.at(0).description, s);
  }
  EXPECT_GT(accepted, 100);
}

TEST(Property, SanitizeClosedUnderConcatenation) {
  std::mt19937_64 rng(4);
  const std::string alphabet = "ab <>/|&;x\"";
  for (int i = 0; i < 20000; ++i) {
    std::string a, b;
    for (int n = rng() % 6; n > 0; --n) a += alphabet[rng() % alphabet.size()];
    for (int n = rng() % 6; n > 0; --n) b += alphabet[rng() % alphabet.size()];
    if (sanitize_error(a) || sanitize_error(b)) continue;
    ASSERT_FALSE(sanitize_error(a + b).has_value()) << '"' << a << "\" + \"" << b << '"';
  }
}

TEST(Envelope, SignVerifyEncodeDecode) {
  auto env = sign_envelope("verb=create&ip=10.10.1.5", "front", kKey);
  EXPECT_TRUE(verify_envelope(env, kKey));
  auto wire = encode_envelope(env);
  EXPECT_EQ(wire.find('\0'), 5u);
  auto back = decode_envelope(wire);
  ASSERT_TRUE(back);
  EXPECT_EQ(back->key_id, "front");
  EXPECT_EQ(back->body, env.body);
  EXPECT_TRUE(verify_envelope(*back, kKey));
  EXPECT_FALSE(decode_envelope("no-separator").has_value());
}

TEST(Envelope, WrongKeyFails) {
  auto env = sign_envelope("body", "k", kKey);
  EXPECT_FALSE(verify_envelope(env, std::string(32, 'j')));
}

TEST(Envelope, ShortKeyRefused) {
  try {
    sign_envelope("body", "k", std::string(31, 'k'));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::KeyTooShort);
  }
}

TEST(Envelope, EverySingleBitFlipFails) {
  std::string body(64, '\0');
  for (std::size_t i = 0; i < body.size(); ++i) body[i] = static_cast<char>(i * 7 + 3);
  const auto env = sign_envelope(body, "k", kKey);
  for (std::size_t bit = 0; bit < 512; ++bit) {
    auto flipped = env;
    flipped.body[bit / 8] = static_cast<char>(flipped.body[bit / 8] ^ (1 << (bit % 8)));
    ASSERT_FALSE(verify_envelope(flipped, kKey)) << "bit " << bit;
  }
}

TEST(Hex, RoundTripAndRejects) {
  const auto bytes = random_bytes(45);
  EXPECT_EQ(bytes.size(), 45u);
  EXPECT_EQ(to_hex(bytes).size(), 90u);
  EXPECT_EQ(from_hex(to_hex(bytes)), bytes);
  EXPECT_FALSE(from_hex("abc").has_value());
  EXPECT_FALSE(from_hex("zz").has_value());
  EXPECT_TRUE(constant_time_equal("abc", "abc"));
  EXPECT_FALSE(constant_time_equal("abc", "abd"));
  EXPECT_FALSE(constant_time_equal("abc", "ab"));
}

TEST(Limits, DefaultsAreConsistent) { EXPECT_TRUE(FieldLimits{}.consistent()); }
