#include "xlbd/scoring.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "xlbd/util.hpp"

namespace xlbd::scoring {

namespace {

constexpr char kJoin = '\x1f';
constexpr const char* kBos = "<s>";

bool is_delim(char32_t c) {
  if (c <= 0x20) return true;  // whitespace and control
  if (c <= 0x7F) {
    return !((c >= '0' && c <= '9') || (c >= 'A' && c <= 'Z') ||
             (c >= 'a' && c <= 'z'));
  }
  return c == 0xB7 || c == 0x3002 || c == 0xFF1F || c == 0xFF01;
}

std::string join(const std::vector<std::string>& tokens, std::size_t begin,
                 std::size_t end) {
  std::string out;
  for (std::size_t i = begin; i < end; ++i) {
    if (i > begin) out.push_back(kJoin);
    out += tokens[i];
  }
  return out;
}

}  // namespace

std::vector<std::string> lm_tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::u32string cps = decode_utf8(to_lower_ascii(text));
  std::u32string cur;
  for (char32_t c : cps) {
    if (is_delim(c)) {
      if (!cur.empty()) {
        tokens.push_back(encode_utf8(cur));
        cur.clear();
      }
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) tokens.push_back(encode_utf8(cur));
  return tokens;
}

void NgramLM::index_gram(const std::vector<std::string>& tokens,
                         std::size_t last, std::size_t n) {
  gram_counts_[join(tokens, last + 1 - n, last + 1)] += 1;
  context_counts_[join(tokens, last + 1 - n, last)] += 1;
}

NgramLM train_lm(const std::vector<std::string>& corpus, int order, double k) {
  if (order < 1) throw ConfigError("LM order must be >= 1");
  if (!(k > 0.0)) throw ConfigError("add-k constant must be positive");

  NgramLM lm;
  lm.order_ = order;
  lm.k_ = k;
  bool any = false;
  for (const std::string& doc : corpus) {
    for (const TokenSpan& sent : split_sentences(doc)) {
      std::vector<std::string> tokens =
          lm_tokenize(std::string(doc.substr(sent.begin, sent.end - sent.begin)));
      if (tokens.empty()) continue;
      any = true;
      std::vector<std::string> padded(order - 1, kBos);
      padded.insert(padded.end(), tokens.begin(), tokens.end());
      for (std::size_t i = order - 1; i < padded.size(); ++i) {
        for (std::size_t n = 1; n <= static_cast<std::size_t>(order); ++n) {
          lm.index_gram(padded, i, n);
        }
        lm.vocab_.insert(padded[i]);
      }
    }
  }
  if (!any) throw ConfigError("LM training corpus has no tokens");
  return lm;
}

double NgramLM::prob(const std::vector<std::string>& context,
                     const std::string& word) const {
  const double denom_k = k_ * static_cast<double>(vocab_.size() + 1);
  std::size_t max_ctx = std::min<std::size_t>(order_ - 1, context.size());
  for (std::size_t len = max_ctx + 1; len-- > 0;) {
    std::string ctx_key = join(context, context.size() - len, context.size());
    auto ctx_it = context_counts_.find(ctx_key);
    if (ctx_it == context_counts_.end() || ctx_it->second == 0) continue;
    std::string gram_key =
        ctx_key.empty() ? word : ctx_key + std::string(1, kJoin) + word;
    auto g_it = gram_counts_.find(gram_key);
    double num = g_it == gram_counts_.end() ? 0.0
                                            : static_cast<double>(g_it->second);
    return (num + k_) / (static_cast<double>(ctx_it->second) + denom_k);
  }
  throw std::logic_error("NgramLM::prob on an untrained model");
}

double NgramLM::perplexity(const std::string& text) const {
  double nll = 0.0;
  std::size_t n_tokens = 0;
  for (const TokenSpan& sent : split_sentences(text)) {
    std::vector<std::string> tokens = lm_tokenize(
        std::string(text.substr(sent.begin, sent.end - sent.begin)));
    if (tokens.empty()) continue;
    std::vector<std::string> padded(order_ - 1, kBos);
    padded.insert(padded.end(), tokens.begin(), tokens.end());
    for (std::size_t i = order_ - 1; i < padded.size(); ++i) {
      std::vector<std::string> ctx(padded.begin(), padded.begin() + i);
      nll -= std::log(prob(ctx, padded[i]));
      ++n_tokens;
    }
  }
  if (n_tokens == 0)
    throw std::invalid_argument("perplexity: text has no tokens");
  return std::exp(nll / static_cast<double>(n_tokens));
}

std::uint64_t NgramLM::gram_count(const std::vector<std::string>& gram) const {
  auto it = gram_counts_.find(join(gram, 0, gram.size()));
  return it == gram_counts_.end() ? 0 : it->second;
}

void NgramLM::rebuild_derived() {
  context_counts_.clear();
  vocab_.clear();
  for (const auto& [key, count] : gram_counts_) {
    std::size_t cut = key.rfind(kJoin);
    std::string ctx = cut == std::string::npos ? "" : key.substr(0, cut);
    std::string word = cut == std::string::npos ? key : key.substr(cut + 1);
    context_counts_[ctx] += count;
    if (word != kBos) vocab_.insert(word);
  }
}

void NgramLM::save(const std::string& path) const {
  std::ostringstream out;
  out << "xlbd-ngramlm v1\torder=" << order_ << "\tk=" << format_metric(k_)
      << "\n";
  for (const auto& [key, count] : gram_counts_) {
    std::string spaced = key;
    for (char& c : spaced) {
      if (c == kJoin) c = ' ';
    }
    out << spaced << "\t" << count << "\n";
  }
  write_file(path, out.str());
}

NgramLM NgramLM::load(const std::string& path) {
  std::istringstream in(read_file(path));
  std::string header;
  if (!std::getline(in, header) || header.rfind("xlbd-ngramlm v1\t", 0) != 0)
    throw ConfigError("bad LM header in " + path);
  NgramLM lm;
  for (const std::string& field : split(header, '\t')) {
    if (field.rfind("order=", 0) == 0) lm.order_ = std::stoi(field.substr(6));
    if (field.rfind("k=", 0) == 0) lm.k_ = std::stod(field.substr(2));
  }
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::size_t tab = line.rfind('\t');
    if (tab == std::string::npos) throw ConfigError("bad LM line in " + path);
    std::string gram = line.substr(0, tab);
    for (char& c : gram) {
      if (c == ' ') c = kJoin;
    }
    lm.gram_counts_[gram] = std::stoull(line.substr(tab + 1));
  }
  if (lm.gram_counts_.empty()) throw ConfigError("empty LM file: " + path);
  lm.rebuild_derived();
  return lm;
}

double perplexity(const NgramLM& lm, const std::string& text) {
  return lm.perplexity(text);
}

// ---------------------------------------------------------------------------
// Embedder

namespace {

std::map<std::string, std::uint64_t> char3_counts(const std::string& text) {
  std::map<std::string, std::uint64_t> counts;
  std::u32string cps =
      decode_utf8(" " + to_lower_ascii(collapse_ws(text)) + " ");
  if (cps.size() < 3) cps.append(3 - cps.size(), U' ');
  for (std::size_t i = 0; i + 3 <= cps.size(); ++i) {
    counts[encode_utf8(std::u32string_view(cps.data() + i, 3))] += 1;
  }
  return counts;
}

}  // namespace

Embedder Embedder::fit(const std::vector<std::string>& corpus) {
  Embedder e;
  for (const std::string& doc : corpus) {
    if (trim(doc).empty()) continue;
    ++e.n_docs_;
    for (const auto& [g, c] : char3_counts(doc)) e.doc_freq_[g] += 1;
  }
  if (e.n_docs_ == 0) throw ConfigError("embedder corpus is empty");
  return e;
}

double Embedder::idf(const std::string& gram) const {
  auto it = doc_freq_.find(gram);
  double df = it == doc_freq_.end() ? 0.0 : static_cast<double>(it->second);
  return std::log((1.0 + static_cast<double>(n_docs_)) / (1.0 + df)) + 1.0;
}

EmbeddingProfile Embedder::profile(const std::string& text) const {
  if (trim(text).empty())
    throw std::invalid_argument("profile: empty text");
  EmbeddingProfile p;
  double sq = 0.0;
  for (const auto& [g, c] : char3_counts(text)) {
    double w = static_cast<double>(c) * idf(g);
    p.weights[g] = w;
    sq += w * w;
  }
  p.norm = std::sqrt(sq);
  return p;
}

double Embedder::similarity(const std::string& a, const std::string& b) const {
  EmbeddingProfile pa = profile(a);
  EmbeddingProfile pb = profile(b);
  // Walk both sorted maps so the accumulation order is independent of
  // argument order; symmetry is then exact.
  double dot = 0.0;
  auto ia = pa.weights.begin();
  auto ib = pb.weights.begin();
  while (ia != pa.weights.end() && ib != pb.weights.end()) {
    if (ia->first < ib->first) {
      ++ia;
    } else if (ib->first < ia->first) {
      ++ib;
    } else {
      dot += ia->second * ib->second;
      ++ia;
      ++ib;
    }
  }
  return dot / (pa.norm * pb.norm);
}

double similarity(const std::string& a, const std::string& b) {
  return Embedder().similarity(a, b);
}

}  // namespace xlbd::scoring
