#pragma once

#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "ssosim/document.hpp"
#include "ssosim/http.hpp"

// In-process substitute for the network: one handler per hostname.

namespace ssosim {

class RoutingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A server's answer: the wire response plus, when the response carries a
// page, its structured form for the browser to render.
struct ServerReply {
    HttpResponse response;
    std::optional<Document> page;
};

class RequestRouter {
public:
    using Handler = std::function<ServerReply(const HttpRequest&)>;

    void mount(std::string host, Handler handler) {
        std::lock_guard lock(mutex_);
        handlers_[std::move(host)] = std::move(handler);
    }

    bool resolves(std::string_view host) const {
        std::lock_guard lock(mutex_);
        return handlers_.find(host) != handlers_.end();
    }

    ServerReply dispatch(const HttpRequest& request) const {
        Handler handler;
        {
            std::lock_guard lock(mutex_);
            auto it = handlers_.find(request.uri.host);
            if (it == handlers_.end()) {
                throw RoutingError("no route for host \"" + request.uri.host + "\"");
            }
            handler = it->second;
        }
        // Handler runs outside the router lock; servers have their own locks.
        return handler(request);
    }

private:
    mutable std::mutex mutex_;
    std::map<std::string, Handler, std::less<>> handlers_;
};

} // namespace ssosim
