#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "xlbd/langid.hpp"

namespace xlbd::translate {

struct TranslationRequest {
  std::string text;
  langid::LanguageCode source;
  langid::LanguageCode target;
};

class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ProtocolError : public std::runtime_error {
 public:
  ProtocolError(const std::string& msg, int status)
      : std::runtime_error(msg), status_(status) {}
  int status() const { return status_; }

 private:
  int status_ = 0;
};

class Translator {
 public:
  virtual ~Translator() = default;

  virtual std::string translate(const TranslationRequest& req) const = 0;

  /// Element-wise translation preserving request order.
  virtual std::vector<std::string> translate_batch(
      const std::vector<TranslationRequest>& reqs) const;

  virtual bool deterministic() const = 0;
  virtual bool supports(const langid::LanguageCode& source,
                        const langid::LanguageCode& target) const = 0;
};

/// Deterministic stand-in for a machine translation service: every
/// whitespace token is re-tagged `<lowercase code><sep><base token>`, with
/// inter-token whitespace preserved. The base token stream is untouched, so
/// translated text stays analytically comparable to its source.
class PseudoTranslator : public Translator {
 public:
  static constexpr const char* kDefaultSeparator = "·";  // middle dot

  explicit PseudoTranslator(
      std::vector<langid::LanguageCode> codes = {"DE", "EN", "ES", "ZH"},
      std::string separator = kDefaultSeparator);

  std::string translate(const TranslationRequest& req) const override;
  bool deterministic() const override { return true; }
  bool supports(const langid::LanguageCode& source,
                const langid::LanguageCode& target) const override;

  /// Removes a recognized sigil prefix, if any. Recognizes both the default
  /// separator and this instance's separator.
  std::string strip_sigil(const std::string& token) const;

  const std::string& separator() const { return separator_; }

 private:
  std::vector<langid::LanguageCode> codes_;
  std::string separator_;
};

struct RetryPolicy {
  int timeout_ms = 2000;
  int max_retries = 2;  // total attempts = max_retries + 1
};

/// Client for the remote translation wire contract:
/// POST {endpoint} with {"text","source","target"}, success {"text": "..."}.
/// Failures (transport, non-2xx, malformed body) are retried up to the
/// policy; the last failure's category is what propagates.
class RemoteTranslator : public Translator {
 public:
  RemoteTranslator(std::string endpoint_url, RetryPolicy policy,
                   int max_in_flight = 4);
  ~RemoteTranslator() override;

  std::string translate(const TranslationRequest& req) const override;

  /// Bounded concurrent requests (max_in_flight); results in request order.
  std::vector<std::string> translate_batch(
      const std::vector<TranslationRequest>& reqs) const override;

  bool deterministic() const override { return false; }
  bool supports(const langid::LanguageCode&,
                const langid::LanguageCode&) const override {
    return true;  // capability is the service's concern
  }

  /// Attempts used by the most recent single translate() on this thread's
  /// last call; for tests of the retry policy.
  int last_attempt_count() const { return last_attempts_; }

 private:
  std::string host_;
  int port_ = 80;
  std::string path_;
  RetryPolicy policy_;
  int max_in_flight_;
  mutable int last_attempts_ = 0;
};

/// Translates segment i into targets[i]; a segment whose given source equals
/// its target is returned verbatim.
std::vector<std::string> translate_segments(
    const std::vector<std::pair<std::string, langid::LanguageCode>>& segments,
    const std::vector<langid::LanguageCode>& targets, const Translator& t);

}  // namespace xlbd::translate
