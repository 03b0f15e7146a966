#pragma once

// CSV report emission: UTF-8, LF line endings, floats with 17 significant
// digits for exact round-trips. Every row carries the config hash in its
// first column; appending rows with a different hash to an existing report
// is refused rather than silently mixed.

#include "config.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

namespace homplate {

struct ReportError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline std::string hash_string(uint64_t h) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

/// One CSV table tied to a config hash. Cells are preformatted strings;
/// use format_g17 for floats.
class CsvReport {
  public:
    CsvReport(std::vector<std::string> header, uint64_t config_hash)
        : header_(std::move(header)), hash_(hash_string(config_hash)) {}

    const std::string& hash() const { return hash_; }

    void add_row(const std::vector<std::string>& cells) {
        if (cells.size() != header_.size())
            throw ReportError("report row has " + std::to_string(cells.size()) +
                              " cells, header has " + std::to_string(header_.size()));
        rows_.push_back(cells);
    }

    std::string to_string() const {
        std::string out = "config_hash";
        for (const auto& h : header_) out += "," + h;
        out += "\n";
        for (const auto& row : rows_) {
            out += hash_;
            for (const auto& c : row) out += "," + c;
            out += "\n";
        }
        return out;
    }

    /// Write (or append to) a CSV file; refuses to mix config hashes.
    void write(const std::string& path, bool append = false) const {
        if (append) {
            std::ifstream in(path);
            if (in) {
                std::string line;
                std::getline(in, line);  // header
                while (std::getline(in, line)) {
                    if (line.empty()) continue;
                    const std::string existing = line.substr(0, line.find(','));
                    if (existing != hash_)
                        throw ReportError("refusing to append rows with config hash " +
                                          hash_ + " to report holding hash " + existing);
                }
                in.close();
                std::ofstream out(path, std::ios::binary | std::ios::app);
                for (const auto& row : rows_) {
                    out << hash_;
                    for (const auto& c : row) out << "," << c;
                    out << "\n";
                }
                return;
            }
        }
        std::ofstream out(path, std::ios::binary);  // binary: LF on all platforms
        if (!out) throw ReportError("cannot open report file '" + path + "'");
        out << to_string();
    }

  private:
    std::vector<std::string> header_;
    std::string hash_;
    std::vector<std::vector<std::string>> rows_;
};

}  // namespace homplate
