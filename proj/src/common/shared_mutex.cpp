#include "artsearch/common/shared_mutex.hpp"

#include "artsearch/common/error.hpp"

namespace artsearch {
namespace {

void check(int rc, const char* what) {
  if (rc != 0) throw Error(ErrorCode::kInternal, what);
}

}  // namespace

SharedMutex::SharedMutex() {
  pthread_rwlockattr_t attr;
  pthread_rwlockattr_init(&attr);
  pthread_rwlockattr_setkind_np(&attr, PTHREAD_RWLOCK_PREFER_WRITER_NONRECURSIVE_NP);
  const int rc = pthread_rwlock_init(&lock_, &attr);
  pthread_rwlockattr_destroy(&attr);
  check(rc, "cannot initialise reader-writer lock");
}

SharedMutex::~SharedMutex() { pthread_rwlock_destroy(&lock_); }

void SharedMutex::lock() { check(pthread_rwlock_wrlock(&lock_), "write lock failed"); }
bool SharedMutex::try_lock() { return pthread_rwlock_trywrlock(&lock_) == 0; }
void SharedMutex::unlock() { pthread_rwlock_unlock(&lock_); }
void SharedMutex::lock_shared() { check(pthread_rwlock_rdlock(&lock_), "read lock failed"); }
bool SharedMutex::try_lock_shared() { return pthread_rwlock_tryrdlock(&lock_) == 0; }
void SharedMutex::unlock_shared() { pthread_rwlock_unlock(&lock_); }

}  // namespace artsearch
