#pragma once

#include <string>

namespace restq {

enum class StatusClass { Success2xx, ClientError4xx, ServerError5xx, Other };

inline StatusClass classify_status(int status) {
    if (status >= 200 && status < 300)
        return StatusClass::Success2xx;
    if (status >= 400 && status < 500)
        return StatusClass::ClientError4xx;
    if (status >= 500 && status < 600)
        return StatusClass::ServerError5xx;
    return StatusClass::Other;
}

inline std::string to_string(StatusClass cls) {
    switch (cls) {
    case StatusClass::Success2xx:
        return "2xx";
    case StatusClass::ClientError4xx:
        return "4xx";
    case StatusClass::ServerError5xx:
        return "5xx";
    case StatusClass::Other:
        return "other";
    }
    return "other";
}

} // namespace restq
