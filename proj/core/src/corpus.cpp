// Copyright 2026 The kdprobe Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "kdprobe/corpus.hpp"

#include <istream>
#include <memory>
#include <json.hpp>
#include <ostream>
#include <unordered_set>

#include "kdprobe/error.hpp"

namespace kdprobe {

using nlohmann::json;

void SegmentationConfig::validate() const {
  require(window_len > 0, ErrorCode::kInvalidArgument, "window_len must be positive");
  require(stride > 0, ErrorCode::kInvalidArgument, "stride must be positive");
  require(stride <= window_len, ErrorCode::kParameterContradiction,
          "stride must not exceed window_len (tokens would be skipped)");
}

namespace {

bool is_unicode_space(char32_t cp) {
  if (cp >= 0x09 && cp <= 0x0D) return true;
  switch (cp) {
    case 0x20: case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

// Byte length of the whitespace character starting at text[i], or 0.
std::size_t whitespace_len(std::string_view text, std::size_t i) {
  const auto b0 = static_cast<unsigned char>(text[i]);
  if (b0 < 0x80) return is_unicode_space(b0) ? 1 : 0;
  std::size_t len = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else {
    return 0;  // 4-byte sequences hold no whitespace; invalid bytes are text
  }
  if (i + len > text.size()) return 0;
  for (std::size_t j = 1; j < len; ++j) {
    const auto b = static_cast<unsigned char>(text[i + j]);
    if ((b & 0xC0) != 0x80) return 0;
    cp = (cp << 6) | (b & 0x3F);
  }
  return is_unicode_space(cp) ? len : 0;
}

}  // namespace

std::vector<std::string_view> tokenize(std::string_view text, TokenizerMode mode) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  std::size_t start = std::string_view::npos;
  while (i < text.size()) {
    std::size_t ws = 0;
    if (mode == TokenizerMode::kSingleSpace) {
      ws = text[i] == ' ' ? 1 : 0;
    } else {
      ws = whitespace_len(text, i);
    }
    if (ws > 0) {
      if (start != std::string_view::npos) {
        tokens.push_back(text.substr(start, i - start));
        start = std::string_view::npos;
      }
      i += ws;
    } else {
      if (start == std::string_view::npos) start = i;
      ++i;
    }
  }
  if (start != std::string_view::npos) tokens.push_back(text.substr(start));
  return tokens;
}

std::vector<std::pair<std::size_t, std::size_t>> window_bounds(
    std::size_t n_tokens, const SegmentationConfig& cfg) {
  cfg.validate();
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::size_t covered = 0;
  for (std::size_t start = 0; start < n_tokens; start += cfg.stride) {
    const std::size_t end = std::min(start + cfg.window_len, n_tokens);
    if (end <= covered) continue;
    if (end - start < cfg.window_len && !cfg.emit_trailing) break;
    out.emplace_back(start, end);
    covered = end;
    if (end == n_tokens) break;
  }
  return out;
}

std::vector<Segment> segment_document(const Document& doc, const SegmentationConfig& cfg,
                                      std::uint64_t first_id) {
  const auto tokens = tokenize(doc.text, cfg.tokenizer);
  std::vector<Segment> out;
  for (const auto& [start, end] : window_bounds(tokens.size(), cfg)) {
    Segment seg;
    seg.segment_id = first_id + out.size();
    seg.doc_id = doc.doc_id;
    seg.token_start = start;
    seg.token_end = end;
    for (std::size_t t = start; t < end; ++t) {
      if (t > start) seg.text.push_back(' ');
      seg.text.append(tokens[t]);
    }
    out.push_back(std::move(seg));
  }
  return out;
}

SegmentManifest segment_corpus(const DocumentSource& source, const SegmentationConfig& cfg,
                               const SegmentSink& sink) {
  cfg.validate();
  SegmentManifest manifest;
  std::unordered_set<std::string> seen;
  Document doc;
  while (source(doc)) {
    require(!doc.doc_id.empty(), ErrorCode::kSchemaViolation, "document with empty id");
    require(seen.insert(doc.doc_id).second, ErrorCode::kSchemaViolation,
            "duplicate doc_id: " + doc.doc_id);
    const auto segments = segment_document(doc, cfg, manifest.total_segments);
    for (const auto& s : segments) sink(s);
    manifest.per_document.emplace_back(doc.doc_id, segments.size());
    manifest.total_segments += segments.size();
  }
  return manifest;
}

SegmentManifest segment_corpus(const std::vector<Document>& docs,
                               const SegmentationConfig& cfg, const SegmentSink& sink) {
  std::size_t next = 0;
  return segment_corpus(
      [&](Document& d) {
        if (next >= docs.size()) return false;
        d = docs[next++];
        return true;
      },
      cfg, sink);
}

DocumentSource jsonl_document_source(std::istream& in) {
  auto line_no = std::make_shared<std::size_t>(0);
  return [&in, line_no](Document& doc) {
    std::string line;
    while (std::getline(in, line)) {
      ++*line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      json j;
      try {
        j = json::parse(line);
      } catch (const json::parse_error& e) {
        fail(ErrorCode::kSchemaViolation,
             "document line " + std::to_string(*line_no) + ": " + e.what());
      }
      require(j.is_object() && j.contains("id") && j.contains("text") &&
                  j["text"].is_string(),
              ErrorCode::kSchemaViolation,
              "document line " + std::to_string(*line_no) + " needs \"id\" and \"text\"");
      doc.doc_id = j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump();
      doc.text = j["text"].get<std::string>();
      return true;
    }
    return false;
  };
}

void write_segment_jsonl(std::ostream& out, const Segment& seg) {
  json j;
  j["segment_id"] = seg.segment_id;
  j["doc_id"] = seg.doc_id;
  j["token_start"] = seg.token_start;
  j["token_end"] = seg.token_end;
  j["text"] = seg.text;
  out << j.dump() << '\n';
}

std::vector<Segment> read_segments_jsonl(std::istream& in) {
  std::vector<Segment> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      Segment s;
      s.segment_id = j.at("segment_id").get<std::uint64_t>();
      s.doc_id = j.at("doc_id").get<std::string>();
      s.token_start = j.at("token_start").get<std::size_t>();
      s.token_end = j.at("token_end").get<std::size_t>();
      s.text = j.at("text").get<std::string>();
      out.push_back(std::move(s));
    } catch (const json::exception& e) {
      fail(ErrorCode::kSchemaViolation,
           "segment line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::string manifest_to_json(const SegmentManifest& manifest) {
  json per_doc = json::array();
  for (const auto& [id, n] : manifest.per_document) {
    per_doc.push_back({{"doc_id", id}, {"segments", n}});
  }
  json j;
  j["total_segments"] = manifest.total_segments;
  j["documents"] = manifest.per_document.size();
  j["per_document"] = std::move(per_doc);
  return j.dump(2);
}

}  // namespace kdprobe
