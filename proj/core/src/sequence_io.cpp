#include "gwr/sequence_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gwr/error.hpp"
#include "gwr/number_format.hpp"

namespace gwr {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream stream(line);
    while (std::getline(stream, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

void strip_cr(std::string& line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
}

std::vector<std::string> expected_header() {
    std::vector<std::string> names = {"t_index"};
    for (const auto& n : joint_names()) names.push_back(n);
    names.push_back("gap");
    return names;
}

std::filesystem::path meta_path(const std::filesystem::path& path) {
    return path.string() + ".meta.json";
}

}  // namespace

void write_sequence_csv(std::ostream& out, const MotionSequence& seq) {
    const auto header = expected_header();
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    out << '\n';
    for (std::size_t i = 0; i < seq.size(); ++i) {
        out << i;
        for (const double v : seq.frames[i]) out << ',' << format_exact(v);
        out << ',' << (seq.has_gap_before(i) ? 1 : 0) << '\n';
    }
}

MotionSequence read_sequence_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("sequence file is empty");
    strip_cr(line);
    const auto header = split_csv_line(line);
    for (const auto& name : expected_header()) {
        if (std::find(header.begin(), header.end(), name) == header.end()) {
            throw ParseError("sequence file is missing column '" + name + "'");
        }
    }
    if (header != expected_header()) throw ParseError("sequence header columns are out of order or unexpected");

    MotionSequence seq;
    bool any_gap = false;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        strip_cr(line);
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size()) {
            throw ParseError("row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                             " columns, expected " + std::to_string(header.size()));
        }
        if (parse_integer(cells[0]) != static_cast<long long>(row)) {
            throw ParseError("row " + std::to_string(row) + " has a non-consecutive t_index");
        }
        Frame f{};
        for (std::size_t j = 0; j < kJointCount; ++j) {
            f[j] = parse_double(cells[j + 1]);
            if (!std::isfinite(f[j])) {
                throw ParseError("row " + std::to_string(row) + " has a non-finite " + joint_names()[j]);
            }
        }
        const long long gap = parse_integer(cells.back());
        if (gap != 0 && gap != 1) throw ParseError("gap flag must be 0 or 1");
        any_gap = any_gap || gap == 1;
        seq.frames.push_back(f);
        seq.gap_before.push_back(static_cast<std::uint8_t>(gap));
        ++row;
    }
    if (seq.frames.empty()) throw ParseError("sequence file has no frames");
    if (!any_gap) seq.gap_before.clear();
    return seq;
}

void save_sequence(const std::filesystem::path& path, const MotionSequence& seq) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    write_sequence_csv(out, seq);
    nlohmann::json meta = {{"format", "gwr-sequence"},
                           {"version", 1},
                           {"fps", seq.fps},
                           {"pattern_label", seq.pattern_label},
                           {"subject_id", seq.subject_id}};
    std::ofstream meta_out(meta_path(path));
    if (!meta_out) throw Error("cannot write " + meta_path(path).string());
    meta_out << meta.dump(2) << '\n';
}

MotionSequence load_sequence(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string());
    MotionSequence seq = read_sequence_csv(in);
    std::ifstream meta_in(meta_path(path));
    if (!meta_in) throw ParseError("missing metadata sidecar " + meta_path(path).string());
    try {
        const auto meta = nlohmann::json::parse(meta_in);
        if (meta.at("format") != "gwr-sequence" || meta.at("version") != 1) {
            throw ParseError("unsupported sequence metadata format");
        }
        seq.fps = meta.at("fps").get<double>();
        seq.pattern_label = meta.at("pattern_label").get<std::string>();
        seq.subject_id = meta.at("subject_id").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("bad metadata in " + meta_path(path).string() + ": " + e.what());
    }
    return seq;
}

void save_dataset(const std::filesystem::path& dir, const Dataset& data) {
    std::filesystem::create_directories(dir);
    std::ofstream manifest(dir / "manifest.csv");
    if (!manifest) throw Error("cannot write manifest in " + dir.string());
    manifest << "file,pattern,subject,repetition\n";
    for (const auto& p : data.patterns) {
        for (std::size_t i = 0; i < p.demos.size(); ++i) {
            const std::string file = p.label + "_s" + std::to_string(p.subjects[i] + 1) + "_r" +
                                     std::to_string(p.repetitions[i] + 1) + ".csv";
            save_sequence(dir / file, p.demos[i]);
            manifest << file << ',' << p.label << ',' << p.subjects[i] << ',' << p.repetitions[i] << '\n';
        }
    }
}

Dataset load_dataset(const std::filesystem::path& dir) {
    std::ifstream manifest(dir / "manifest.csv");
    if (!manifest) throw ParseError("missing manifest.csv in " + dir.string());
    std::string line;
    std::getline(manifest, line);
    strip_cr(line);
    if (line != "file,pattern,subject,repetition") throw ParseError("unexpected manifest header");
    Dataset data;
    std::map<std::string, std::size_t> index;
    while (std::getline(manifest, line)) {
        strip_cr(line);
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != 4) throw ParseError("manifest row needs 4 columns");
        auto [it, inserted] = index.emplace(cells[1], data.patterns.size());
        if (inserted) data.patterns.push_back({cells[1], {}, {}, {}});
        PatternDemos& demos = data.patterns[it->second];
        demos.demos.push_back(load_sequence(dir / cells[0]));
        demos.subjects.push_back(static_cast<std::size_t>(parse_integer(cells[2])));
        demos.repetitions.push_back(static_cast<std::size_t>(parse_integer(cells[3])));
    }
    if (data.patterns.empty()) throw ParseError("manifest lists no sequences");
    return data;
}

}  // namespace gwr
