#include "nutri/provider.hpp"

#include <fcntl.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nutri/errors.hpp"
#include "nutri/usda.hpp"

extern char** environ;

namespace nutri {

std::vector<EmbedResult> EmbeddingProvider::embed_batch(const std::vector<std::string>& texts) {
    std::vector<EmbedResult> out;
    out.reserve(texts.size());
    for (const auto& text : texts) {
        try {
            out.push_back({embed(text), {}});
        } catch (const ProviderError& e) {
            out.push_back({{}, e.what()});
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

PrecomputedProvider::PrecomputedProvider(EmbeddingStore store) : store_(std::move(store)) {}

PrecomputedProvider PrecomputedProvider::from_line_keyed(const EmbeddingStore& store,
                                                         const std::vector<std::string>& lines) {
    EmbeddingStore keyed(store.dimension(), store.model_tag());
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const EmbeddingRecord* rec = store.find(std::to_string(i));
        if (!rec) {
            throw ProviderError("query embeddings have no record for line " + std::to_string(i));
        }
        std::string key;
        try {
            key = normalize_query_title(lines[i]);
        } catch (const QueryError&) {
            continue;
        }
        if (!keyed.find(key)) keyed.add(std::move(key), rec->vector);
    }
    return PrecomputedProvider(std::move(keyed));
}

std::vector<double> PrecomputedProvider::embed(const std::string& text) {
    const EmbeddingRecord* rec = store_.find(text);
    if (!rec) throw ProviderError("no precomputed embedding for '" + text + "'");
    return std::vector<double>(rec->vector.begin(), rec->vector.end());
}

// ---------------------------------------------------------------------------

namespace {

namespace fs = std::filesystem;

bool is_executable(const fs::path& p) {
    return ::access(p.c_str(), X_OK) == 0 && !fs::is_directory(p);
}

bool resolve_executable(const std::string& name) {
    if (name.find('/') != std::string::npos) return is_executable(name);
    const char* path = std::getenv("PATH");
    if (!path) return false;
    std::stringstream ss(path);
    std::string dir;
    while (std::getline(ss, dir, ':')) {
        if (!dir.empty() && is_executable(fs::path(dir) / name)) return true;
    }
    return false;
}

// Removes its directory on scope exit.
class TempDir {
public:
    TempDir() {
        std::string tmpl = (fs::temp_directory_path() / "nutri-provider-XXXXXX").string();
        if (!::mkdtemp(tmpl.data())) throw ProviderError("cannot create temp directory");
        path_ = tmpl;
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

}  // namespace

ProcessProvider::ProcessProvider(std::vector<std::string> argv) : argv_(std::move(argv)) {
    if (argv_.empty()) throw ProviderError("provider command is empty");
}

void ProcessProvider::check_available() const {
    if (!resolve_executable(argv_.front())) {
        throw ProviderError("embedding provider '" + argv_.front() + "' is not an executable");
    }
}

std::vector<double> ProcessProvider::embed(const std::string& text) {
    auto results = embed_batch({text});
    if (!results.front().ok()) throw ProviderError(results.front().error);
    return std::move(results.front().vector);
}

std::vector<EmbedResult> ProcessProvider::embed_batch(const std::vector<std::string>& texts) {
    check_available();
    if (texts.empty()) return {};

    TempDir dir;
    const fs::path input = dir.path() / "input.txt";
    const fs::path output = dir.path() / "output.nteb";
    {
        std::ofstream in(input, std::ios::binary);
        for (const auto& t : texts) {
            if (t.find('\n') != std::string::npos) {
                throw ProviderError("provider input contains a newline: '" + t + "'");
            }
            in << t << '\n';
        }
        if (!in) throw ProviderError("cannot write provider input");
    }

    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_addopen(&actions, STDIN_FILENO, input.c_str(), O_RDONLY, 0);
    posix_spawn_file_actions_addopen(&actions, STDOUT_FILENO, output.c_str(),
                                     O_WRONLY | O_CREAT | O_TRUNC, 0600);

    std::vector<char*> args;
    for (auto& a : argv_) args.push_back(a.data());
    args.push_back(nullptr);

    pid_t pid = 0;
    const int rc = ::posix_spawnp(&pid, args[0], &actions, nullptr, args.data(), environ);
    posix_spawn_file_actions_destroy(&actions);
    if (rc != 0) throw ProviderError("cannot start provider '" + argv_.front() + "'");

    int status = 0;
    if (::waitpid(pid, &status, 0) < 0) throw ProviderError("waiting for provider failed");
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
        throw ProviderError("provider '" + argv_.front() + "' exited with status " +
                            std::to_string(WIFEXITED(status) ? WEXITSTATUS(status) : -1));
    }

    EmbeddingStore store(1);
    try {
        store = read_store_file(output.string());
    } catch (const Error& e) {
        throw ProviderError(std::string("provider returned an invalid NTEB stream: ") + e.what());
    }
    if (store.model_tag().find(kProviderProtocolTag) == std::string::npos) {
        throw ProviderError("provider model tag '" + store.model_tag() + "' lacks " +
                            kProviderProtocolTag);
    }
    model_tag_ = store.model_tag();

    std::vector<EmbedResult> out(texts.size());
    for (std::size_t i = 0; i < texts.size(); ++i) {
        const EmbeddingRecord* rec = store.find(std::to_string(i));
        if (!rec) {
            out[i].error = "provider returned no embedding for line " + std::to_string(i);
            continue;
        }
        out[i].vector.assign(rec->vector.begin(), rec->vector.end());
    }
    return out;
}

}  // namespace nutri
