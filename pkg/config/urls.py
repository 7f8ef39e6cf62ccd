"""
URL configuration for the containment backend.

Only the admin is served; experiment runs are browsed there.
"""
from django.contrib import admin
from django.urls import path

urlpatterns = [
    path("admin/", admin.site.urls),
]
