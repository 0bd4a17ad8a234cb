#pragma once

// Manifest text format:
//
//   SAFN-MANIFEST 1
//   name <corpus name>
//   speakers <id> <id> ...
//   utt <id> <speaker> <path relative to the manifest directory>
//   ...

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "safn/corpus/interchange.hpp"

namespace safn {

struct UtteranceRef {
  std::string id;
  std::string speaker_id;
  std::filesystem::path path;
};

struct CorpusManifest {
  std::string name;
  std::vector<std::string> speakers;
  std::vector<UtteranceRef> utterances;
  std::filesystem::path root;  // directory that relative paths resolve against

  void validate() const {
    std::set<std::string> ids;
    const std::set<std::string> spk(speakers.begin(), speakers.end());
    if (spk.size() != speakers.size()) throw DataError("manifest " + name + " lists a speaker twice");
    for (const auto& u : utterances) {
      if (!ids.insert(u.id).second) throw DataError("manifest " + name + ": duplicate utterance id " + u.id);
      if (!spk.count(u.speaker_id))
        throw DataError("manifest " + name + ": utterance " + u.id + " has unlisted speaker " + u.speaker_id);
    }
  }

  std::filesystem::path resolve(const UtteranceRef& u) const { return u.path.is_absolute() ? u.path : root / u.path; }

  std::vector<const UtteranceRef*> of_speaker(const std::string& speaker) const {
    std::vector<const UtteranceRef*> out;
    for (const auto& u : utterances)
      if (u.speaker_id == speaker) out.push_back(&u);
    return out;
  }

  bool has_speaker(const std::string& s) const {
    return std::find(speakers.begin(), speakers.end(), s) != speakers.end();
  }
};

inline void write_manifest(const CorpusManifest& m, const std::filesystem::path& path) {
  m.validate();
  std::ostringstream os;
  os << "SAFN-MANIFEST 1\n";
  os << "name " << m.name << "\n";
  os << "speakers";
  for (const auto& s : m.speakers) os << " " << s;
  os << "\n";
  for (const auto& u : m.utterances) os << "utt " << u.id << " " << u.speaker_id << " " << u.path.generic_string() << "\n";
  write_file(path, os.str());
}

inline CorpusManifest read_manifest(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  CorpusManifest m;
  m.root = path.parent_path();
  std::string line;
  if (!std::getline(in, line) || line != "SAFN-MANIFEST 1")
    throw VersionError(path.string() + ": not a version-1 SAFN manifest");
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "name") {
      ls >> m.name;
    } else if (key == "speakers") {
      for (std::string s; ls >> s;) m.speakers.push_back(s);
    } else if (key == "utt") {
      UtteranceRef u;
      std::string p;
      ls >> u.id >> u.speaker_id;
      std::getline(ls >> std::ws, p);
      if (u.id.empty() || u.speaker_id.empty() || p.empty())
        throw DataError(path.string() + ":" + std::to_string(line_no) + ": malformed utt line");
      u.path = p;
      m.utterances.push_back(std::move(u));
    } else {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
  m.validate();
  return m;
}

inline Utterance load_utterance(const CorpusManifest& m, const UtteranceRef& ref) {
  Utterance u = read_interchange(m.resolve(ref));
  if (u.id != ref.id || u.speaker_id != ref.speaker_id)
    throw DataError("utterance file " + m.resolve(ref).string() + " does not match its manifest entry " + ref.id);
  return u;
}

}  // namespace safn
