#include <cctype>

#include "temsearch/corpus.hpp"

namespace temsearch {

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char ch : text) {
    if (std::isalnum(ch)) {
      cur.push_back(static_cast<char>(std::tolower(ch)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

const std::unordered_set<std::string>& stopword_set() {
  static const std::unordered_set<std::string> words = {
      "i",       "me",      "my",      "myself",  "we",      "our",     "ours",    "ourselves",
      "you",     "your",    "yours",   "yourself", "yourselves", "he",  "him",     "his",
      "himself", "she",     "her",     "hers",    "herself", "it",      "its",     "itself",
      "they",    "them",    "their",   "theirs",  "themselves", "what", "which",   "who",
      "whom",    "this",    "that",    "these",   "those",   "am",      "is",      "are",
      "was",     "were",    "be",      "been",    "being",   "have",    "has",     "had",
      "having",  "do",      "does",    "did",     "doing",   "a",       "an",      "the",
      "and",     "but",     "if",      "or",      "because", "as",      "until",   "while",
      "of",      "at",      "by",      "for",     "with",    "about",   "against", "between",
      "into",    "through", "during",  "before",  "after",   "above",   "below",   "to",
      "from",    "up",      "down",    "in",      "out",     "on",      "off",     "over",
      "under",   "again",   "further", "then",    "once",    "here",    "there",   "when",
      "where",   "why",     "how",     "all",     "any",     "both",    "each",    "few",
      "more",    "most",    "other",   "some",    "such",    "no",      "nor",     "not",
      "only",    "own",     "same",    "so",      "than",    "too",     "very",    "can",
      "will",    "just",    "should",  "now",     "would",   "could",   "ought",
      // fragments left by splitting contractions on the apostrophe
      "s",       "t",       "d",       "ll",      "m",       "o",       "re",      "ve",
      "y",       "ain",     "aren",    "couldn",  "didn",    "doesn",   "don",     "hadn",
      "hasn",    "haven",   "isn",     "ma",      "mightn",  "mustn",   "needn",   "shan",
      "shouldn", "wasn",    "weren",   "won",     "wouldn",  "cannot",  "let",
  };
  return words;
}

}  // namespace temsearch
