#include "xlbd/translate.hpp"

#include <algorithm>
#include <future>
#include <stdexcept>

#include "httplib.h"
#include "json.hpp"
#include "xlbd/util.hpp"

namespace xlbd::translate {

using nlohmann::json;

std::vector<std::string> Translator::translate_batch(
    const std::vector<TranslationRequest>& reqs) const {
  std::vector<std::string> out;
  out.reserve(reqs.size());
  for (const TranslationRequest& r : reqs) out.push_back(translate(r));
  return out;
}

PseudoTranslator::PseudoTranslator(std::vector<langid::LanguageCode> codes,
                                   std::string separator)
    : codes_(std::move(codes)), separator_(std::move(separator)) {
  for (const auto& c : codes_) {
    if (!langid::valid_code(c))
      throw ConfigError("invalid language code: " + c);
  }
  std::sort(codes_.begin(), codes_.end());
  if (separator_.empty()) throw ConfigError("empty sigil separator");
}

bool PseudoTranslator::supports(const langid::LanguageCode& source,
                                const langid::LanguageCode& target) const {
  return std::binary_search(codes_.begin(), codes_.end(), source) &&
         std::binary_search(codes_.begin(), codes_.end(), target);
}

std::string PseudoTranslator::strip_sigil(const std::string& token) const {
  auto sigil_len = [&](const std::string& sep) -> std::size_t {
    if (token.size() <= 2 + sep.size()) return 0;
    char a = token[0], b = token[1];
    if (a < 'a' || a > 'z' || b < 'a' || b > 'z') return 0;
    std::string code{static_cast<char>(a - 'a' + 'A'),
                     static_cast<char>(b - 'a' + 'A')};
    if (!std::binary_search(codes_.begin(), codes_.end(), code)) return 0;
    if (token.compare(2, sep.size(), sep) != 0) return 0;
    return 2 + sep.size();
  };
  std::size_t len = sigil_len(separator_);
  if (len == 0 && separator_ != kDefaultSeparator)
    len = sigil_len(kDefaultSeparator);
  return len == 0 ? token : token.substr(len);
}

std::string PseudoTranslator::translate(const TranslationRequest& req) const {
  if (trim(req.text).empty())
    throw std::invalid_argument("translate: empty text");
  if (!supports(req.source, req.target))
    throw ConfigError("pseudo translator does not support " + req.source +
                      "->" + req.target);

  const std::string tag = to_lower_ascii(req.target) + separator_;
  std::string out;
  out.reserve(req.text.size() + 8);
  std::size_t i = 0;
  const std::string& text = req.text;
  while (i < text.size()) {
    if (is_space(text[i])) {
      out.push_back(text[i]);
      ++i;
      continue;
    }
    std::size_t begin = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    out += tag + strip_sigil(text.substr(begin, i - begin));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Remote client

namespace {

void parse_endpoint(const std::string& url, std::string* host, int* port,
                    std::string* path) {
  std::string rest = url;
  if (rest.rfind("http://", 0) == 0) {
    rest = rest.substr(7);
  } else if (rest.rfind("https://", 0) == 0) {
    throw ConfigError("https endpoints are not supported: " + url);
  }
  std::size_t slash = rest.find('/');
  std::string hostport = slash == std::string::npos ? rest : rest.substr(0, slash);
  *path = slash == std::string::npos ? "/" : rest.substr(slash);
  std::size_t colon = hostport.find(':');
  if (colon == std::string::npos) {
    *host = hostport;
    *port = 80;
  } else {
    *host = hostport.substr(0, colon);
    *port = std::stoi(hostport.substr(colon + 1));
  }
  if (host->empty()) throw ConfigError("bad endpoint url: " + url);
}

}  // namespace

RemoteTranslator::RemoteTranslator(std::string endpoint_url, RetryPolicy policy,
                                   int max_in_flight)
    : policy_(policy), max_in_flight_(std::max(1, max_in_flight)) {
  parse_endpoint(endpoint_url, &host_, &port_, &path_);
  if (policy_.max_retries < 0) throw ConfigError("max_retries must be >= 0");
  if (policy_.timeout_ms <= 0) throw ConfigError("timeout_ms must be positive");
}

RemoteTranslator::~RemoteTranslator() = default;

std::string RemoteTranslator::translate(const TranslationRequest& req) const {
  if (trim(req.text).empty())
    throw std::invalid_argument("translate: empty text");

  json body;
  body["text"] = req.text;
  body["source"] = req.source;
  body["target"] = req.target;
  const std::string payload = body.dump();

  std::string transport_msg;
  std::string protocol_msg;
  int protocol_status = 0;
  bool last_was_transport = false;

  const int attempts = policy_.max_retries + 1;
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    last_attempts_ = attempt;
    httplib::Client client(host_, port_);
    client.set_connection_timeout(0, policy_.timeout_ms * 1000);
    client.set_read_timeout(0, policy_.timeout_ms * 1000);
    client.set_write_timeout(0, policy_.timeout_ms * 1000);

    auto res = client.Post(path_, payload, "application/json");
    if (!res) {
      transport_msg = "translation request to " + host_ + ":" +
                      std::to_string(port_) + " failed: " +
                      httplib::to_string(res.error());
      last_was_transport = true;
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      protocol_msg = "translation service returned status " +
                     std::to_string(res->status);
      protocol_status = res->status;
      last_was_transport = false;
      continue;
    }
    json reply;
    try {
      reply = json::parse(res->body);
    } catch (const json::exception&) {
      protocol_msg = "translation response is not valid JSON";
      protocol_status = res->status;
      last_was_transport = false;
      continue;
    }
    if (!reply.is_object() || !reply.contains("text") ||
        !reply["text"].is_string() ||
        reply["text"].get<std::string>().empty()) {
      protocol_msg = "translation response missing non-empty \"text\"";
      protocol_status = res->status;
      last_was_transport = false;
      continue;
    }
    return reply["text"].get<std::string>();
  }

  if (last_was_transport)
    throw TransportError(transport_msg + " after " + std::to_string(attempts) +
                         " attempts");
  throw ProtocolError(protocol_msg + " after " + std::to_string(attempts) +
                          " attempts",
                      protocol_status);
}

std::vector<std::string> RemoteTranslator::translate_batch(
    const std::vector<TranslationRequest>& reqs) const {
  std::vector<std::string> out(reqs.size());
  std::size_t next = 0;
  while (next < reqs.size()) {
    std::size_t chunk =
        std::min<std::size_t>(max_in_flight_, reqs.size() - next);
    std::vector<std::future<std::string>> futs;
    futs.reserve(chunk);
    for (std::size_t i = 0; i < chunk; ++i) {
      const TranslationRequest& r = reqs[next + i];
      futs.push_back(std::async(std::launch::async,
                                [this, &r] { return translate(r); }));
    }
    for (std::size_t i = 0; i < chunk; ++i) out[next + i] = futs[i].get();
    next += chunk;
  }
  return out;
}

std::vector<std::string> translate_segments(
    const std::vector<std::pair<std::string, langid::LanguageCode>>& segments,
    const std::vector<langid::LanguageCode>& targets, const Translator& t) {
  if (segments.size() != targets.size())
    throw std::invalid_argument("translate_segments: segment/target length mismatch");

  std::vector<std::string> out(segments.size());
  std::vector<TranslationRequest> pending;
  std::vector<std::size_t> pending_idx;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (segments[i].second == targets[i]) {
      out[i] = segments[i].first;  // already in the target language
    } else {
      pending.push_back({segments[i].first, segments[i].second, targets[i]});
      pending_idx.push_back(i);
    }
  }
  std::vector<std::string> translated = t.translate_batch(pending);
  for (std::size_t j = 0; j < translated.size(); ++j)
    out[pending_idx[j]] = std::move(translated[j]);
  return out;
}

}  // namespace xlbd::translate
