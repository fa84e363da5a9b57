#include "xlbd/langid.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "xlbd/util.hpp"

namespace xlbd::langid {

namespace {

// Script classes for the fast path. Letters only; everything else is 0.
enum Script {
  kNone = 0,
  kLatin,
  kHan,
  kKana,
  kHangul,
  kCyrillic,
  kGreek,
  kArabic,
  kHebrew,
  kDevanagari,
};

int script_of(char32_t c) {
  if ((c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z')) return kLatin;
  if (c >= 0x00C0 && c <= 0x024F && c != 0x00D7 && c != 0x00F7) return kLatin;
  if ((c >= 0x4E00 && c <= 0x9FFF) || (c >= 0x3400 && c <= 0x4DBF)) return kHan;
  if (c >= 0x3040 && c <= 0x30FF) return kKana;
  if ((c >= 0xAC00 && c <= 0xD7AF) || (c >= 0x1100 && c <= 0x11FF))
    return kHangul;
  if (c >= 0x0400 && c <= 0x04FF) return kCyrillic;
  if (c >= 0x0370 && c <= 0x03FF) return kGreek;
  if (c >= 0x0600 && c <= 0x06FF) return kArabic;
  if (c >= 0x0590 && c <= 0x05FF) return kHebrew;
  if (c >= 0x0900 && c <= 0x097F) return kDevanagari;
  return kNone;
}

std::u32string normalized_codepoints(const std::string& text) {
  std::string norm = " " + to_lower_ascii(collapse_ws(text)) + " ";
  return decode_utf8(norm);
}

struct RankedGram {
  std::string gram;
  std::uint64_t count;
};

std::vector<RankedGram> ranked(const std::map<std::string, std::uint64_t>& counts,
                               int max_ranked) {
  std::vector<RankedGram> v;
  v.reserve(counts.size());
  for (const auto& [g, c] : counts) v.push_back({g, c});
  std::sort(v.begin(), v.end(), [](const RankedGram& a, const RankedGram& b) {
    if (a.count != b.count) return a.count > b.count;
    return a.gram < b.gram;
  });
  if (static_cast<int>(v.size()) > max_ranked) v.resize(max_ranked);
  return v;
}

}  // namespace

bool valid_code(const LanguageCode& code) {
  return code.size() == 2 && code[0] >= 'A' && code[0] <= 'Z' &&
         code[1] >= 'A' && code[1] <= 'Z';
}

std::map<std::string, std::uint64_t> count_char_ngrams(const std::string& text) {
  std::map<std::string, std::uint64_t> counts;
  std::u32string cps = normalized_codepoints(text);
  for (std::size_t i = 0; i < cps.size(); ++i) {
    for (std::size_t n = 1; n <= 3 && i + n <= cps.size(); ++n) {
      counts[encode_utf8(std::u32string_view(cps.data() + i, n))] += 1;
    }
  }
  return counts;
}

void LanguageProfile::rebuild_ranks(int max_ranked) {
  ranks.clear();
  int r = 0;
  for (const RankedGram& g : ranked(ngram_counts, max_ranked)) {
    ranks[g.gram] = r++;
  }
  // Dominant script from single-codepoint grams.
  std::uint64_t by_script[16] = {};
  for (const auto& [g, c] : ngram_counts) {
    std::u32string cps = decode_utf8(g);
    if (cps.size() == 1) {
      int s = script_of(cps[0]);
      if (s != kNone) by_script[s] += c;
    }
  }
  dominant_script = kNone;
  std::uint64_t best = 0;
  for (int s = 1; s < 16; ++s) {
    if (by_script[s] > best) {
      best = by_script[s];
      dominant_script = s;
    }
  }
}

ProfileSet ProfileSet::train(
    const std::map<LanguageCode, std::vector<std::string>>& corpora) {
  if (corpora.size() < 1) throw ConfigError("no training corpora given");
  ProfileSet set;
  for (const auto& [code, texts] : corpora) {
    if (!valid_code(code)) throw ConfigError("invalid language code: " + code);
    LanguageProfile p;
    p.code = code;
    bool any = false;
    for (const std::string& t : texts) {
      if (trim(t).empty()) continue;
      any = true;
      for (const auto& [g, c] : count_char_ngrams(t)) {
        p.ngram_counts[g] += c;
        p.total += c;
      }
    }
    if (!any)
      throw ConfigError("empty training corpus for language " + code);
    p.rebuild_ranks(kMaxRanked);
    set.codes_.push_back(code);
    set.profiles_.push_back(std::move(p));
  }
  return set;  // std::map iteration keeps codes_ sorted
}

const LanguageProfile& ProfileSet::profile(const LanguageCode& code) const {
  for (std::size_t i = 0; i < codes_.size(); ++i) {
    if (codes_[i] == code) return profiles_[i];
  }
  throw ConfigError("no profile for language " + code);
}

bool ProfileSet::has(const LanguageCode& code) const {
  return std::find(codes_.begin(), codes_.end(), code) != codes_.end();
}

IdentifyResult ProfileSet::identify(const std::string& text) const {
  if (trim(text).empty())
    throw std::invalid_argument("identify: empty text");
  if (profiles_.size() < 2)
    throw std::invalid_argument("identify: need at least two profiles");

  // Script fast path: if every letter falls in one script and exactly one
  // registered language is dominant in that script, short-circuit.
  {
    std::u32string cps = normalized_codepoints(text);
    int seen = kNone;
    bool uniform = true;
    for (char32_t c : cps) {
      int s = script_of(c);
      if (s == kNone) continue;
      if (seen == kNone) seen = s;
      if (s != seen) {
        uniform = false;
        break;
      }
    }
    if (uniform && seen != kNone) {
      const LanguageProfile* only = nullptr;
      for (const LanguageProfile& p : profiles_) {
        if (p.dominant_script == seen) {
          if (only != nullptr) {
            only = nullptr;
            break;
          }
          only = &p;
        }
      }
      if (only != nullptr) return {only->code, 1.0};
    }
  }

  std::map<std::string, int> text_ranks;
  {
    int r = 0;
    for (const RankedGram& g : ranked(count_char_ngrams(text), kMaxRanked)) {
      text_ranks[g.gram] = r++;
    }
  }

  // Out-of-place distance over the text's ranked grams.
  double best = -1.0, second = -1.0;
  std::size_t best_i = 0;
  for (std::size_t i = 0; i < profiles_.size(); ++i) {
    double dist = 0.0;
    for (const auto& [g, tr] : text_ranks) {
      auto it = profiles_[i].ranks.find(g);
      int pr = it == profiles_[i].ranks.end() ? kMaxRanked : it->second;
      dist += std::abs(tr - pr);
    }
    if (best < 0.0 || dist < best) {
      second = best;
      best = dist;
      best_i = i;
    } else if (second < 0.0 || dist < second) {
      second = dist;
    }
  }
  double confidence = 0.0;
  if (second > 0.0 && second > best)
    confidence = (second - best) / second;
  return {codes_[best_i], confidence};
}

std::vector<LanguageRun> ProfileSet::segment(const std::string& text,
                                             int window) const {
  if (trim(text).empty())
    throw std::invalid_argument("segment: empty text");
  if (window < 1) throw std::invalid_argument("segment: window must be >= 1");

  std::vector<TokenSpan> tokens = tokenize_ws(text);
  const std::size_t n = tokens.size();
  const int h = window / 2;

  std::vector<std::string> token_code(n);
  std::vector<double> token_conf(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t lo = i >= static_cast<std::size_t>(h) ? i - h : 0;
    std::size_t hi = std::min(n - 1, i + h);
    std::string win(text.substr(tokens[lo].begin,
                                tokens[hi].end - tokens[lo].begin));
    IdentifyResult r = identify(win);
    token_code[i] = r.code;
    token_conf[i] = r.confidence;
  }

  // Token-level runs.
  struct TokRun {
    std::size_t first, last;  // token indices, inclusive
    std::string code;
  };
  std::vector<TokRun> runs;
  for (std::size_t i = 0; i < n; ++i) {
    if (!runs.empty() && runs.back().code == token_code[i]) {
      runs.back().last = i;
    } else {
      runs.push_back({i, i, token_code[i]});
    }
  }

  // Merge runs below the smoothing scale into the longer neighbor, shortest
  // run first, until everything is at least kMinRunTokens tokens.
  auto run_len = [](const TokRun& r) { return r.last - r.first + 1; };
  while (runs.size() > 1) {
    std::size_t pick = runs.size();
    std::size_t pick_len = kMinRunTokens;
    for (std::size_t i = 0; i < runs.size(); ++i) {
      std::size_t len = run_len(runs[i]);
      if (len < pick_len) {
        pick = i;
        pick_len = len;
      }
    }
    if (pick == runs.size()) break;

    std::size_t prev_len = pick > 0 ? run_len(runs[pick - 1]) : 0;
    std::size_t next_len = pick + 1 < runs.size() ? run_len(runs[pick + 1]) : 0;
    std::size_t target = (prev_len >= next_len) ? pick - 1 : pick + 1;
    if (pick == 0) target = 1;
    if (pick + 1 == runs.size()) target = pick - 1;

    runs[pick].code = runs[target].code;
    std::vector<TokRun> merged;
    for (const TokRun& r : runs) {
      if (!merged.empty() && merged.back().code == r.code) {
        merged.back().last = r.last;
      } else {
        merged.push_back(r);
      }
    }
    runs = std::move(merged);
  }

  // Char spans: run boundaries sit at the first token of the next run, so
  // inter-run whitespace belongs to the preceding run and spans cover the
  // whole text.
  std::vector<LanguageRun> out;
  out.reserve(runs.size());
  for (std::size_t j = 0; j < runs.size(); ++j) {
    LanguageRun lr;
    lr.begin = j == 0 ? 0 : tokens[runs[j].first].begin;
    lr.end = j + 1 < runs.size() ? tokens[runs[j + 1].first].begin : text.size();
    lr.code = runs[j].code;
    double conf = 0.0;
    for (std::size_t t = runs[j].first; t <= runs[j].last; ++t)
      conf += token_conf[t];
    lr.confidence = conf / static_cast<double>(run_len(runs[j]));
    out.push_back(std::move(lr));
  }
  return out;
}

bool ProfileSet::is_multilingual(const std::string& text) const {
  return segment(text).size() >= 2;
}

void ProfileSet::save(const std::string& dir) const {
  std::filesystem::create_directories(dir);
  for (const LanguageProfile& p : profiles_) {
    std::ostringstream out;
    out << "xlbd-langprofile v1\tcode=" << p.code << "\ttotal=" << p.total
        << "\n";
    for (const auto& [g, c] : p.ngram_counts) out << g << "\t" << c << "\n";
    write_file(dir + "/" + p.code + ".profile", out.str());
  }
}

ProfileSet ProfileSet::load(const std::string& dir,
                            const std::vector<LanguageCode>& codes) {
  std::vector<LanguageCode> sorted = codes;
  std::sort(sorted.begin(), sorted.end());
  ProfileSet set;
  for (const LanguageCode& code : sorted) {
    std::string path = dir + "/" + code + ".profile";
    std::istringstream in(read_file(path));
    std::string header;
    if (!std::getline(in, header) ||
        header.rfind("xlbd-langprofile v1\t", 0) != 0)
      throw ConfigError("bad profile header in " + path);
    LanguageProfile p;
    p.code = code;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::size_t tab = line.rfind('\t');
      if (tab == std::string::npos)
        throw ConfigError("bad profile line in " + path);
      std::string gram = line.substr(0, tab);
      std::uint64_t c = std::stoull(line.substr(tab + 1));
      p.ngram_counts[gram] = c;
      p.total += c;
    }
    if (p.ngram_counts.empty()) throw ConfigError("empty profile: " + path);
    p.rebuild_ranks(kMaxRanked);
    set.codes_.push_back(code);
    set.profiles_.push_back(std::move(p));
  }
  return set;
}

}  // namespace xlbd::langid
