#pragma once

// Raw corpus directory -> interchange files + manifest.
//
// Recognized inputs, searched recursively:
//   <utt>.ema (EST track) with a <utt>.wav of the same stem (same directory
//   preferred, otherwise anywhere in the tree when the stem is unique);
//   <utt>.utt files already in interchange format.
// Speaker id: the stem prefix before the first '_' when present, otherwise
// the corpus name.

#include <algorithm>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "safn/corpus/est.hpp"
#include "safn/corpus/manifest.hpp"
#include "safn/corpus/wav.hpp"

namespace safn {

struct ConvertResult {
  CorpusManifest manifest;
  std::vector<std::string> log;  // one line per input file
};

namespace detail {

inline std::string speaker_from_stem(const std::string& stem, const std::string& corpus) {
  const auto us = stem.find('_');
  return us == std::string::npos || us == 0 ? corpus : stem.substr(0, us);
}

inline std::vector<std::filesystem::path> sorted_files(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace detail

inline ConvertResult convert_corpus(const std::filesystem::path& input, const std::string& corpus_name,
                                    const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(input)) throw DataError("convert: input " + input.string() + " is not a directory");
  if (fs::exists(out_dir) && fs::equivalent(input, out_dir))
    throw ConfigError("convert: output directory must differ from the input directory");
  const auto files = detail::sorted_files(input);

  std::map<std::string, std::vector<fs::path>> wav_by_stem;
  for (const auto& f : files)
    if (f.extension() == ".wav") wav_by_stem[f.stem().string()].push_back(f);
  const auto channel_map = builtin_channel_map(corpus_name);

  ConvertResult r;
  r.manifest.name = corpus_name;
  r.manifest.root = out_dir;
  auto add = [&](Utterance u, const fs::path& src) {
    if (!r.manifest.has_speaker(u.speaker_id)) r.manifest.speakers.push_back(u.speaker_id);
    const fs::path rel = fs::path(u.speaker_id) / (u.id + ".utt");
    write_interchange(u, out_dir / rel);
    r.manifest.utterances.push_back({u.id, u.speaker_id, rel});
    r.log.push_back("ok " + u.id + " " + src.string());
  };

  for (const auto& f : files) {
    const std::string stem = f.stem().string();
    try {
      if (f.extension() == ".utt") {
        add(read_interchange(f), f);
      } else if (f.extension() == ".ema") {
        const auto it = wav_by_stem.find(stem);
        fs::path wav;
        if (it != wav_by_stem.end()) {
          for (const auto& w : it->second)
            if (w.parent_path() == f.parent_path()) wav = w;
          if (wav.empty() && it->second.size() == 1) wav = it->second.front();
        }
        if (wav.empty()) {
          r.log.push_back("skip " + f.string() + ": no matching " + stem + ".wav");
          continue;
        }
        Utterance u;
        u.id = stem;
        u.speaker_id = detail::speaker_from_stem(stem, corpus_name);
        u.ema = parse_est_track(read_file(f));
        apply_channel_map(u.ema, channel_map);
        u.audio = read_wav(wav);
        try {
          u.check_durations();
        } catch (const DataError& e) {
          log_warn(std::string("convert: ") + e.what());
        }
        add(std::move(u), f);
      }
    } catch (const DataError& e) {
      r.log.push_back("skip " + f.string() + ": " + e.what());
    }
  }
  if (r.manifest.utterances.empty())
    throw DataError("convert: no usable utterances under " + input.string() +
                    "; expected EST track files <utt>.ema with matching <utt>.wav, or interchange <utt>.utt files");
  r.manifest.validate();
  write_manifest(r.manifest, out_dir / "manifest.txt");
  std::string log;
  for (const auto& l : r.log) log += l + "\n";
  write_file(out_dir / "convert.log", log);
  return r;
}

}  // namespace safn
