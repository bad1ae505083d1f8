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

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace kdprobe {

struct Document {
  std::string doc_id;
  std::string text;
};

enum class TokenizerMode {
  kWhitespaceRuns,  // any maximal run of Unicode whitespace separates tokens
  kSingleSpace,     // only U+0020 separates tokens; empty tokens are dropped
};

struct SegmentationConfig {
  std::size_t window_len = 50;
  std::size_t stride = 40;
  bool emit_trailing = true;
  TokenizerMode tokenizer = TokenizerMode::kWhitespaceRuns;

  void validate() const;
};

struct Segment {
  std::uint64_t segment_id = 0;
  std::string doc_id;
  std::size_t token_start = 0;
  std::size_t token_end = 0;  // exclusive
  std::string text;           // tokens joined by a single space
};

// Token views into `text`; valid while `text` lives.
std::vector<std::string_view> tokenize(std::string_view text, TokenizerMode mode);

// Window start offsets that are emitted for a document of `n_tokens` tokens.
// A window is emitted iff it covers at least one token no earlier window did.
std::vector<std::pair<std::size_t, std::size_t>> window_bounds(
    std::size_t n_tokens, const SegmentationConfig& cfg);

// Segment ids start at `first_id` and increase by one.
std::vector<Segment> segment_document(const Document& doc,
                                      const SegmentationConfig& cfg,
                                      std::uint64_t first_id = 0);

struct SegmentManifest {
  std::vector<std::pair<std::string, std::uint64_t>> per_document;
  std::uint64_t total_segments = 0;
};

using DocumentSource = std::function<bool(Document&)>;  // false at end of stream
using SegmentSink = std::function<void(const Segment&)>;

// Streams documents through segment_document. Segment ids are dense from 0 in
// input order. Throws on a repeated doc_id.
SegmentManifest segment_corpus(const DocumentSource& source,
                               const SegmentationConfig& cfg,
                               const SegmentSink& sink);
SegmentManifest segment_corpus(const std::vector<Document>& docs,
                               const SegmentationConfig& cfg,
                               const SegmentSink& sink);

// JSON-lines adapters. Documents: {"id","text"}. Segments: {"segment_id",
// "doc_id","token_start","token_end","text"}.
DocumentSource jsonl_document_source(std::istream& in);
void write_segment_jsonl(std::ostream& out, const Segment& seg);
std::vector<Segment> read_segments_jsonl(std::istream& in);
std::string manifest_to_json(const SegmentManifest& manifest);

}  // namespace kdprobe
