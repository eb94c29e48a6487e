#include "wow/jsonl.hpp"

#include "wow/errors.hpp"

#include <fstream>
#include <sstream>

namespace wow {

std::vector<Json> parse_jsonl(const std::string& text) {
    std::vector<Json> out;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(Json::parse(line));
        } catch (const Json::parse_error& e) {
            throw IngestError(lineno, std::string("malformed JSON: ") + e.what());
        }
    }
    return out;
}

std::vector<Json> read_jsonl(const std::filesystem::path& path) {
    return parse_jsonl(read_text_file(path));
}

std::string to_jsonl(std::span<const Json> records) {
    std::string out;
    for (const auto& r : records) {
        out += r.dump();
        out.push_back('\n');
    }
    return out;
}

void write_jsonl(const std::filesystem::path& path, std::span<const Json> records) {
    write_text_file(path, to_jsonl(records));
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StageDependencyError(path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("IoError", "cannot write " + path.string());
        out << content;
        if (!out) throw Error("IoError", "write failed for " + path.string());
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace wow
