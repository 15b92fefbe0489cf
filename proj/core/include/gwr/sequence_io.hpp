#pragma once

#include <filesystem>
#include <iosfwd>

#include "gwr/motion.hpp"
#include "gwr/synthetic.hpp"

namespace gwr {

// Sequence files are CSV with the header
//   t_index,l_shoulder_pitch,...,r_elbow_roll,gap
// one row per frame, values in shortest round-trip decimal form. Metadata
// (format version, fps, pattern label, subject) lives in a JSON sidecar at
// "<file>.meta.json".

void write_sequence_csv(std::ostream& out, const MotionSequence& seq);
/// Reads frames and gap flags; metadata fields are left at their defaults.
MotionSequence read_sequence_csv(std::istream& in);

void save_sequence(const std::filesystem::path& path, const MotionSequence& seq);
MotionSequence load_sequence(const std::filesystem::path& path);

// Dataset directories hold one sequence file per demonstration plus
// manifest.csv with columns file,pattern,subject,repetition.
void save_dataset(const std::filesystem::path& dir, const Dataset& data);
Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace gwr
